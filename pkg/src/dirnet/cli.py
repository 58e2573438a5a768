"""Scenario runner: ``dirnet-sim --scenario FILE``.

Scenario files are flat ``key = value`` lines with ``#`` comments. Repeated
keys: ``role = <node> <MANAGER|BACKUP>``, ``fault = <tick> <KIND> <node>
[duration]``, ``update = <tick> <node> <SUBCODE> [op1 [op2]]`` and
``assert = <metric> <op> <value>``.

Exit status: 0 when every assertion holds, 1 when one fails, 2 on a parse
or configuration error.
"""

from __future__ import annotations

import argparse
import operator
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from dirnet.component import Timeouts
from dirnet.db import Role
from dirnet.protocol import DbSubcode
from dirnet.simnet import FAULT_KINDS, ConfigError, FaultEvent, Report, SimConfig, UpdateEvent, format_trace, run

OPS = {
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}

METRICS = (
    "suspicions",
    "suspicions_active",
    "teif_broadcasts",
    "spans",
    "reboots",
    "reboot_requests",
    "respawns",
    "elections",
    "niua",
    "final_managerid",
    "replicas_equal",
)

# scenario key -> SimConfig field
_INT_KEYS = {
    "n_nodes": "n_nodes",
    "latency": "latency",
    "jitter": "jitter",
    "run_length": "run_length",
    "seed": "seed",
    "inject_deadline": "inject_deadline",
    "respawn_delay": "respawn_delay",
    "reboot_delay": "reboot_delay",
    "max_procs": "max_procs",
    "tasks_per_node": "tasks_per_node",
}
_BOOL_KEYS = {"inject": "inject", "reboot_enabled": "reboot_enabled"}
# scenario key -> Timeouts field
_TIMEOUT_KEYS = {f"{f.name}_timeout": f.name for f in fields(Timeouts)}
_REPEATED = ("role", "fault", "update", "assert")


class ScenarioError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0) -> None:
        self.line, self.column = line, column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class Assertion:
    metric: str
    op: str
    value: int

    def check(self, report: Report) -> bool:
        return OPS[self.op](report.metrics()[self.metric], self.value)

    def __str__(self) -> str:
        return f"{self.metric} {self.op} {self.value}"


@dataclass(frozen=True)
class Scenario:
    config: SimConfig
    asserts: tuple[Assertion, ...] = ()


def _int(text: str, line: int, col: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ScenarioError(f"expected an integer, got {text!r}", line, col) from None


def _bool(text: str, line: int, col: int) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ScenarioError(f"expected a boolean, got {text!r}", line, col)


def parse_scenario(text: str) -> Scenario:
    values: dict = {}
    timeouts: dict = {}
    roles: dict[int, Role] = {}
    faults: list[FaultEvent] = []
    updates: list[UpdateEvent] = []
    asserts: list[Assertion] = []
    seen: set[str] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        if "=" not in body:
            raise ScenarioError("expected 'key = value'", lineno, 1)
        key_part, value_part = body.split("=", 1)
        key = key_part.strip()
        value = value_part.strip()
        vcol = len(key_part) + 2 + (len(value_part) - len(value_part.lstrip()))
        if not value:
            raise ScenarioError(f"missing value for {key!r}", lineno, vcol)
        if key not in _REPEATED:
            if key in seen:
                raise ScenarioError(f"duplicate key {key!r}", lineno, 1)
            seen.add(key)
        words = value.split()

        if key in _INT_KEYS:
            values[_INT_KEYS[key]] = _int(value, lineno, vcol)
        elif key in _BOOL_KEYS:
            values[_BOOL_KEYS[key]] = _bool(value, lineno, vcol)
        elif key in _TIMEOUT_KEYS:
            timeouts[_TIMEOUT_KEYS[key]] = _int(value, lineno, vcol)
        elif key == "persist_dir":
            values["persist_dir"] = value
        elif key == "role":
            if len(words) != 2:
                raise ScenarioError("role needs '<node> <MANAGER|BACKUP>'", lineno, vcol)
            node = _int(words[0], lineno, vcol)
            if words[1] not in ("MANAGER", "BACKUP"):
                raise ScenarioError(f"unknown role {words[1]!r}", lineno, vcol)
            if node in roles:
                raise ScenarioError(f"node {node} has two role lines", lineno, vcol)
            roles[node] = Role[words[1]]
        elif key == "fault":
            if len(words) not in (3, 4):
                raise ScenarioError("fault needs '<tick> <KIND> <node> [duration]'", lineno, vcol)
            if words[1] not in FAULT_KINDS:
                raise ScenarioError(f"unknown fault kind {words[1]!r}", lineno, vcol)
            duration = _int(words[3], lineno, vcol) if len(words) == 4 else 0
            faults.append(FaultEvent(_int(words[0], lineno, vcol), words[1], _int(words[2], lineno, vcol), duration))
        elif key == "update":
            if not 3 <= len(words) <= 5:
                raise ScenarioError("update needs '<tick> <node> <SUBCODE> [op1 [op2]]'", lineno, vcol)
            sub = words[2]
            if sub in DbSubcode.__members__:
                subcode = int(DbSubcode[sub])
            else:
                subcode = _int(sub, lineno, vcol)
            ops = [_int(w, lineno, vcol) for w in words[3:]] + [0, 0]
            updates.append(
                UpdateEvent(_int(words[0], lineno, vcol), _int(words[1], lineno, vcol), subcode, ops[0], ops[1])
            )
        elif key == "assert":
            if len(words) != 3:
                raise ScenarioError("assert needs '<metric> <op> <value>'", lineno, vcol)
            metric, op, target = words
            if metric not in METRICS:
                raise ScenarioError(f"unknown metric {metric!r}", lineno, vcol)
            if op not in OPS:
                raise ScenarioError(f"unknown operator {op!r}", lineno, vcol)
            if target.lower() in ("true", "false"):
                number = int(target.lower() == "true")
            else:
                number = _int(target, lineno, vcol)
            asserts.append(Assertion(metric, op, number))
        else:
            raise ScenarioError(f"unknown key {key!r}", lineno, 1)

    try:
        cfg = SimConfig(timeouts=Timeouts(**timeouts), faults=tuple(faults), updates=tuple(updates), **values)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    if roles:
        if sorted(roles) != list(range(cfg.n_nodes)):
            raise ScenarioError(f"role lines must cover nodes 0..{cfg.n_nodes - 1} exactly")
        cfg = replace(cfg, roles=tuple(roles[i] for i in range(cfg.n_nodes)))
    try:
        cfg.validate()
    except ConfigError as exc:
        raise ScenarioError(str(exc)) from exc
    return Scenario(config=cfg, asserts=tuple(asserts))


def format_scenario(sc: Scenario) -> str:
    """Canonical text; ``parse_scenario(format_scenario(s)) == s``."""
    c = sc.config
    lines = [f"{key} = {getattr(c, name)}" for key, name in _INT_KEYS.items()]
    lines += [f"{key} = {str(getattr(c, name)).lower()}" for key, name in _BOOL_KEYS.items()]
    lines += [f"{key} = {getattr(c.timeouts, name)}" for key, name in _TIMEOUT_KEYS.items()]
    if c.persist_dir is not None:
        lines.append(f"persist_dir = {c.persist_dir}")
    if c.roles is not None:
        lines += [f"role = {i} {Role(r).name}" for i, r in enumerate(c.roles)]
    for f in c.faults:
        tail = f" {f.duration}" if f.duration else ""
        lines.append(f"fault = {f.at} {f.kind} {f.node}{tail}")
    for u in c.updates:
        try:
            sub = DbSubcode(u.subcode).name
        except ValueError:
            sub = str(u.subcode)
        lines.append(f"update = {u.at} {u.node} {sub} {u.op1} {u.op2}")
    lines += [f"assert = {a}" for a in sc.asserts]
    return "\n".join(lines) + "\n"


def _write(dest: str, text: str) -> None:
    if dest == "-":
        sys.stdout.write(text)
    else:
        Path(dest).write_text(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dirnet-sim", description="Run a DIR net fault-injection scenario.")
    p.add_argument("--scenario", required=True, help="scenario file")
    p.add_argument("--trace", help="write the event trace here ('-' for stdout)")
    p.add_argument("--report", default="-", help="write the report here ('-' for stdout, the default)")
    p.add_argument("--report-format", choices=("text", "kv"), default="text")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--ticks", type=int, help="override the scenario run length")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.scenario).read_text()
    except OSError as exc:
        print(f"dirnet-sim: cannot read scenario: {exc}", file=sys.stderr)
        return 2
    try:
        sc = parse_scenario(text)
        cfg = sc.config
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.ticks is not None:
            cfg = replace(cfg, run_length=args.ticks)
        cfg.validate()
    except (ScenarioError, ConfigError) as exc:
        print(f"dirnet-sim: {args.scenario}: {exc}", file=sys.stderr)
        return 2

    trace, report = run(cfg)
    if args.trace:
        _write(args.trace, format_trace(trace))
    if args.report:
        _write(args.report, report.to_kv() if args.report_format == "kv" else report.to_text())

    failed = [a for a in sc.asserts if not a.check(report)]
    for a in failed:
        print(f"dirnet-sim: assertion failed: {a} (got {report.metrics()[a.metric]})", file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
