from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from dirnet.cli import Assertion, Scenario, ScenarioError, format_scenario, main, parse_scenario
from dirnet.component import Timeouts
from dirnet.db import Role
from dirnet.simnet import FaultEvent, SimConfig, UpdateEvent, format_trace, run

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

QUIET = """\
# quiet net
n_nodes = 4
run_length = 8000
role = 0 MANAGER
role = 1 BACKUP
role = 2 BACKUP
role = 3 BACKUP
assert = suspicions == 0
"""


def write(tmp_path, text, name="s.scn"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_minimal_scenario_defaults():
    sc = parse_scenario("n_nodes = 3\n")
    assert sc.config == SimConfig(n_nodes=3)
    assert sc.asserts == ()


def test_full_scenario():
    sc = parse_scenario(
        QUIET
        + "fault = 100 FREEZE_COMPONENT 2 50\nupdate = 200 3 DB_NEW_STATUS 7\nset_timeout = 900\ninject = yes\n"
    )
    c = sc.config
    assert c.roles == (Role.MANAGER, Role.BACKUP, Role.BACKUP, Role.BACKUP)
    assert c.faults == (FaultEvent(100, "FREEZE_COMPONENT", 2, 50),)
    assert c.updates == (UpdateEvent(200, 3, 200, 7, 0),)
    assert c.timeouts.set == 900 and c.inject
    assert sc.asserts == (Assertion("suspicions", "==", 0),)


@pytest.mark.parametrize(
    "text,line",
    [
        ("role = 0 MANAGER\nrole = 0 BACKUP\n", 2),
        ("bogus = 1\n", 1),
        ("n_nodes = four\n", 1),
        ("n_nodes = 4\nn_nodes = 4\n", 2),
        ("fault = 10 MELT 1\n", 1),
        ("assert = happiness > 3\n", 1),
        ("assert = spans ~ 3\n", 1),
        ("just words\n", 1),
    ],
)
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(text)
    assert exc.value.line == line


def test_zero_managers_is_config_error():
    text = "n_nodes = 2\nrole = 0 BACKUP\nrole = 1 BACKUP\n"
    with pytest.raises(ScenarioError, match="MANAGER"):
        parse_scenario(text)


def test_partial_role_table_rejected():
    with pytest.raises(ScenarioError):
        parse_scenario("n_nodes = 3\nrole = 0 MANAGER\n")


def test_error_column():
    with pytest.raises(ScenarioError) as exc:
        parse_scenario("latency =  x\n")
    assert exc.value.column == 12


def test_file_equals_programmatic():
    sc = parse_scenario(QUIET + "fault = 3000 CRASH_COMPONENT 1\n")
    cfg = SimConfig(
        run_length=8000,
        roles=(Role.MANAGER,) + (Role.BACKUP,) * 3,
        faults=(FaultEvent(3000, "CRASH_COMPONENT", 1),),
    )
    assert format_trace(run(sc.config)[0]) == format_trace(run(cfg)[0])


scenarios = st.builds(
    Scenario,
    st.builds(
        SimConfig,
        n_nodes=st.just(4),
        roles=st.sampled_from([None, (Role.BACKUP, Role.MANAGER, Role.BACKUP, Role.BACKUP)]),
        timeouts=st.builds(Timeouts, clear=st.integers(1, 500), set=st.integers(501, 2000)),
        latency=st.integers(1, 20),
        jitter=st.integers(0, 5),
        run_length=st.integers(5000, 9000),
        seed=st.integers(0, 99),
        faults=st.lists(
            st.builds(FaultEvent, st.integers(0, 4999), st.sampled_from(["CRASH_NODE", "REBOOT_NODE"]), st.integers(0, 3)),
            max_size=3,
        ).map(tuple),
        updates=st.lists(
            st.builds(UpdateEvent, st.integers(0, 4999), st.integers(0, 3), st.sampled_from([200, 202]), st.integers(0, 3)),
            max_size=2,
        ).map(tuple),
        reboot_enabled=st.booleans(),
    ),
    st.lists(st.builds(Assertion, st.sampled_from(["spans", "elections"]), st.sampled_from(["==", "<="]), st.integers(0, 3)), max_size=2).map(tuple),
)


@given(scenarios)
def test_format_parse_identity(sc):
    assert parse_scenario(format_scenario(sc)) == sc


def test_main_quiet_exit_zero(tmp_path, capsys):
    path = write(tmp_path, QUIET)
    trace = tmp_path / "trace.txt"
    assert main(["--scenario", path, "--trace", str(trace), "--report-format", "kv"]) == 0
    out = capsys.readouterr().out
    assert "suspicions=0" in out
    assert trace.read_text().startswith("0 0 SENT")


def test_main_assert_failure_exit_one(tmp_path):
    path = write(tmp_path, QUIET.replace("8000", "15000") + "fault = 5000 CRASH_COMPONENT 2\n")
    assert main(["--scenario", path, "--report", str(tmp_path / "r.txt")]) == 1
    assert "suspicions" in (tmp_path / "r.txt").read_text()


def test_main_missing_file_exit_two(tmp_path):
    assert main(["--scenario", str(tmp_path / "nope.scn")]) == 2


def test_main_bad_scenario_exit_two(tmp_path):
    assert main(["--scenario", write(tmp_path, "n_nodes = 9\n")]) == 2


def test_overrides(tmp_path, capsys):
    path = write(tmp_path, QUIET)
    assert main(["--scenario", path, "--ticks", "600", "--seed", "5", "--trace", "-", "--report", ""]) == 0
    out = capsys.readouterr().out
    assert int(out.splitlines()[-1].split()[0]) <= 600
    assert main(["--scenario", path, "--ticks", "-1"]) == 2


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.scn")), ids=lambda p: p.stem)
def test_shipped_scenarios_pass(path):
    assert main(["--scenario", str(path), "--report", ""]) == 0
