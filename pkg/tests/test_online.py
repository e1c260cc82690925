from fractions import Fraction

import pytest

from aoisched.aoi import evaluate_schedule
from aoisched.channel import ChannelTrace, gen_bernoulli
from aoisched.errors import ParameterError
from aoisched.offline import dp_opt
from aoisched.online import (
    LAPDOAScheduler,
    PDOAScheduler,
    as_trust,
    follow_prediction_run,
    lapdoa_run,
    pdoa_run,
    srp_probability,
    srp_run,
)
from aoisched.tcp_ack import check_dual_feasible, check_primal_feasible, interval_ratio_report


def test_pdoa_all_on():
    tr = ChannelTrace((1, 1, 1, 1))
    sched, cert = pdoa_run(tr, 2)
    assert sched.times == [2, 4]
    assert evaluate_schedule(tr, sched, 2).total == 6
    assert cert.primal_total == 8 and cert.dual_total == 4
    assert all(iv.ratio == 2 for iv in cert.intervals)


def test_pdoa_on_off_off_on():
    tr = ChannelTrace((1, 0, 0, 1))
    sched, cert = pdoa_run(tr, 2)
    assert sched.times == [4]
    assert evaluate_schedule(tr, sched, 2).total == 8
    assert (cert.primal_total, cert.dual_total) == (8, 5)
    assert dp_opt(tr, 2)[0] == 7


def test_pdoa_all_off():
    T = 6
    sched, cert = pdoa_run(ChannelTrace((0,) * T), 3)
    assert sched.times == []
    assert evaluate_schedule(ChannelTrace((0,) * T), sched, 3).total == T * (T + 1) // 2
    last = cert.intervals[-1]
    assert last.primal <= 2 * last.dual


def test_pdoa_noninteger_cost_dual_in_range():
    tr = gen_bernoulli(0.6, 60, 3)
    c = Fraction(37, 10)
    _, cert = pdoa_run(tr, c)
    assert all(0 < y <= 1 for y in cert.dual.values.values())
    for iv in cert.intervals:
        if iv.acked:
            # acked intervals collect exactly c of dual mass
            assert iv.dual >= c
    assert check_dual_feasible(tr, cert.dual, c).ok
    assert check_primal_feasible(tr, cert.ack_solution).ok


def test_online_rejects_small_cost():
    with pytest.raises(ParameterError):
        PDOAScheduler(1)
    with pytest.raises(ParameterError):
        LAPDOAScheduler(Fraction(1, 2), [], Fraction(1, 2))


@pytest.mark.parametrize("lam", [0, -1, Fraction(3, 2), "x"])
def test_trust_validation(lam):
    with pytest.raises(ParameterError):
        as_trust(lam)


def test_lapdoa_prediction_validation():
    tr = ChannelTrace((1, 1, 1))
    with pytest.raises(ParameterError):
        lapdoa_run(tr, 2, [3, 2], 0.5)
    with pytest.raises(ParameterError):
        lapdoa_run(tr, 2, [4], 0.5)
    with pytest.raises(ParameterError):
        follow_prediction_run(tr, [0], 2)


def test_lapdoa_hand_trace():
    sched, cert = lapdoa_run(ChannelTrace((1, 1, 1, 1)), 2, [2, 4], Fraction(1, 2))
    assert sched.times == [2, 4]
    assert check_dual_feasible(ChannelTrace((1, 1, 1, 1)), cert.dual, 2, Fraction(3, 2)).ok


def test_lapdoa_lambda_one_is_pdoa():
    for seed in range(30):
        tr = gen_bernoulli(0.5, 80, seed)
        pred = gen_bernoulli(0.2, 80, seed + 100).on_slots
        a, ca = pdoa_run(tr, 5)
        b, cb = lapdoa_run(tr, 5, pred, 1)
        assert a == b and ca.intervals == cb.intervals


def test_lapdoa_certificate():
    tr = gen_bernoulli(0.4, 120, 8)
    lam = Fraction(1, 4)
    pred = [5, 17, 40, 41, 90]
    _, cert = lapdoa_run(tr, 5, pred, lam)
    assert check_primal_feasible(tr, cert.ack_solution).ok
    assert check_dual_feasible(tr, cert.dual, 5, Fraction(6, 5)).ok
    assert check_dual_feasible(tr, cert.dual.scaled(Fraction(5, 6)), 5).ok
    assert interval_ratio_report(cert, 3 / lam).ok


def test_acks_only_on_on_slots_and_causal():
    tr = gen_bernoulli(0.3, 200, 1)
    full, _ = pdoa_run(tr, 7)
    assert all(tr.state(t) for t in full.times)
    for cut in (1, 50, 137):
        prefix, _ = pdoa_run(tr.prefix(cut), 7)
        assert prefix.decisions == full.decisions[:cut]


def test_step_interface():
    sched = PDOAScheduler(2, record=False)
    assert [sched.step(s) for s in (1, 1, 1, 1)] == [0, 1, 0, 1]
    with pytest.raises(ParameterError):
        sched.step(3)
    cert = sched.certificate()
    assert not cert.has_entries and cert.primal_total == 8


def test_follow_prediction_examples():
    sched, br = follow_prediction_run(ChannelTrace((1, 1, 1, 1)), [2, 4], 2)
    assert (br.transmission_cost, br.staleness_cost) == (4, 2)
    sched, br = follow_prediction_run(ChannelTrace((1, 0, 1)), [2], 2)
    assert sched.times == [] and (br.transmission_cost, br.staleness_cost) == (0, 6)


def test_follow_dp_is_opt():
    for seed in range(20):
        tr = gen_bernoulli(0.35, 150, seed)
        opt, sched = dp_opt(tr, 15)
        assert follow_prediction_run(tr, sched.times, 15)[1].total == opt


def test_srp_probability():
    assert srp_probability(10, 15) == 1.0
    assert srp_probability(2, 16) == 0.5
    tr = ChannelTrace((1,) * 8)
    assert srp_probability(tr.horizon / sum(tr.states), 4) == 0.5


def test_srp_run():
    tr = gen_bernoulli(0.1, 500, 2)
    assert srp_run(tr, 15, 0).times == tr.on_slots
    half = srp_run(ChannelTrace((1,) * 400), 4, 3)
    assert 150 < len(half.times) < 250
    assert srp_run(ChannelTrace((1,) * 400), 4, 3) == half
    with pytest.raises(ParameterError):
        srp_run(ChannelTrace((0, 0)), 4, 0)


def test_off_slot_prediction_breaks_free_consistency():
    # follow-the-prediction drops the OFF entry at no cost, but LAPDOA still
    # makes a big update for it and ACKs at the next ON slot
    from aoisched.harness import consistency_bound

    tr = ChannelTrace((0, 1))
    c, lam = Fraction(11, 5), Fraction(1, 20)
    sched, _ = lapdoa_run(tr, c, [1], lam)
    _, fc = follow_prediction_run(tr, [1], c)
    cost = evaluate_schedule(tr, sched, c).total
    assert sched.times == [2] and cost == Fraction(16, 5)
    assert (fc.transmission_cost, fc.staleness_cost) == (0, 3)
    assert cost > consistency_bound(c, lam, 0, 3)
    assert cost <= consistency_bound(c, lam, c, 3)
