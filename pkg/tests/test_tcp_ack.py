from fractions import Fraction

import pytest

from aoisched.aoi import Schedule, evaluate_schedule
from aoisched.channel import ChannelTrace
from aoisched.errors import ConversionError, IngestionError, ParameterError
from aoisched.online import pdoa_run
from aoisched.tcp_ack import (
    AckSolution,
    DualSolution,
    ack_cost,
    ack_solution_to_schedule,
    certificate_from_dict,
    certificate_to_dict,
    check_dual_feasible,
    check_interval_sums,
    check_primal_feasible,
    dual_objective,
    format_interval_table,
    interval_ratio_report,
    load_certificate,
    save_certificate,
    schedule_to_ack_solution,
)

ALL_ON = ChannelTrace((1, 1, 1, 1))


def all_pairs(T):
    return frozenset((i, t) for t in range(1, T + 1) for i in range(1, t + 1))


def test_schedule_to_ack_solution_example():
    sol = schedule_to_ack_solution(ALL_ON, Schedule.from_times([2, 4], 4))
    assert sol.ack_times == (2, 4)
    assert sol.unacked == {(1, 1), (3, 3)}
    assert ack_cost(sol, 2).total == 6


def test_empty_schedule_is_all_unacked():
    sol = schedule_to_ack_solution(ChannelTrace((0, 1, 0)), Schedule((0, 0, 0)))
    assert sol.unacked == all_pairs(3)
    assert ack_cost(sol, 2).staleness_cost == 6


def test_conversion_rejects_off_slot_ack():
    with pytest.raises(ConversionError):
        schedule_to_ack_solution(ChannelTrace((1, 0)), Schedule((0, 1)))


def test_roundtrip_and_redundant_z():
    tr = ChannelTrace((1, 0, 1, 1, 0))
    sched = Schedule.from_times([1, 4], 5)
    sol = schedule_to_ack_solution(tr, sched)
    assert ack_solution_to_schedule(sol) == sched
    assert ack_cost(sol, 3).total == evaluate_schedule(tr, sched, 3).total
    padded = AckSolution(sol.ack_times, sol.unacked | {(1, 4)}, 5)
    assert evaluate_schedule(tr, ack_solution_to_schedule(padded), 3).total == ack_cost(padded, 3).total - 1


def test_primal_checker():
    assert check_primal_feasible(ALL_ON, AckSolution((), all_pairs(4), 4)).ok
    rep = check_primal_feasible(ALL_ON, AckSolution((), all_pairs(4) - {(1, 1)}, 4))
    assert not rep.ok and (1, 1) in rep.violations
    # an ACK on an OFF slot clears nothing
    off = ChannelTrace((0, 1))
    rep = check_primal_feasible(off, AckSolution((1,), frozenset({(2, 2)}), 2))
    assert not rep.ok


def test_dual_checker():
    assert check_dual_feasible(ALL_ON, DualSolution({}), 2).ok
    assert dual_objective(DualSolution({})) == 0
    y = {(1, 1): Fraction(1), (1, 2): Fraction(1), (2, 2): Fraction(1)}
    # slots 1 and 2 both carry 2
    assert check_dual_feasible(ALL_ON, DualSolution(y), 2).ok
    rep = check_dual_feasible(ALL_ON, DualSolution(y), Fraction(3, 2))
    assert not rep.ok and [v[1] for v in rep.violations] == [1, 2]
    assert check_dual_feasible(ALL_ON, DualSolution(y), Fraction(3, 2), Fraction(4, 3)).ok
    # OFF slots carry no constraint
    assert check_dual_feasible(ChannelTrace((1, 0, 0, 0)), DualSolution({(2, 2): 1, (3, 3): 1, (2, 4): 1}), 1).ok
    assert not check_dual_feasible(ALL_ON, DualSolution({(1, 1): Fraction(3, 2)}), 5).ok
    with pytest.raises(ParameterError):
        check_dual_feasible(ALL_ON, DualSolution({}), 2, Fraction(1, 2))


def test_pdoa_hand_traces():
    sched, cert = pdoa_run(ALL_ON, 2)
    assert cert.ack_times == (2, 4)
    assert ack_cost(cert.ack_solution, 2).total == 8  # own z overcounts the real cost 6
    assert dual_objective(cert.dual) == 4
    assert [iv.ratio for iv in cert.intervals] == [2, 2]
    sched, cert = pdoa_run(ChannelTrace((1, 0, 0, 1)), 2)
    assert ack_solution_to_schedule(cert.ack_solution).times == [4]
    assert cert.primal_total == 8 and dual_objective(cert.dual) == 5


def test_trailing_interval_ratio_one():
    # M never reaches 1: every update has y = 1 and z = 1
    _, cert = pdoa_run(ChannelTrace((1, 1, 1)), 15)
    last = cert.intervals[-1]
    assert not last.acked and last.ratio == 1


def test_interval_ratio_report_flags():
    _, cert = pdoa_run(ALL_ON, 2)
    assert interval_ratio_report(cert, 3).ok
    rep = interval_ratio_report(cert, Fraction(3, 2))
    assert not rep.ok and len(rep.violations) == 2
    with pytest.raises(ParameterError):
        interval_ratio_report(cert, 0)


def test_certificate_roundtrip(tmp_path):
    _, cert = pdoa_run(ChannelTrace((1, 0, 0, 1, 1, 0)), Fraction(5, 2))
    path = tmp_path / "cert.json"
    save_certificate(path, cert)
    back = load_certificate(path)
    assert certificate_to_dict(back) == certificate_to_dict(cert)
    assert check_interval_sums(back).ok


def test_tampered_certificate_detected():
    _, cert = pdoa_run(ChannelTrace((1, 0, 0, 1)), 2)
    data = certificate_to_dict(cert)
    data["y"][0][2] = "0"
    assert not check_interval_sums(certificate_from_dict(data)).ok
    data = certificate_to_dict(cert)
    data["z"] = data["z"][1:]
    tampered = certificate_from_dict(data)
    assert not check_primal_feasible(ChannelTrace((1, 0, 0, 1)), tampered.ack_solution).ok


def test_malformed_certificate(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    with pytest.raises(IngestionError):
        load_certificate(path)
    with pytest.raises(IngestionError):
        certificate_from_dict({"c": "2"})


def test_table_format():
    _, cert = pdoa_run(ALL_ON, 2)
    table = format_interval_table(cert)
    assert "[1,2]" in table and "[3,4]" in table and "2.0000" in table
