"""Sectioned text format for simulation scenarios.

A scenario file declares the subscriber registry, link models, scheduled
events, an optional adversary script, and the expectations the CLI checks
after the run.  The format is line-oriented and diff-friendly; any unknown
section or malformed line fails at load time with its line number.
"""

from __future__ import annotations

from pathlib import Path

from . import wire
from .simnet import (
    CaptureMatching,
    CorruptBit,
    Inject,
    LinkModel,
    ReplayCaptured,
    RotateMpc,
    Scenario,
    ScenarioError,
    SendParameterUpdate,
    StartIcd,
    SubscriberSpec,
)

SCENARIO_HEADER = "wgiot-scenario v1"

_SECTIONS = ("options", "registry", "links", "schedule", "adversary", "expect")

_FRAME_COUNT_OPS = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    ">=": lambda a, b: a >= b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    "<": lambda a, b: a < b,
}


class _Line:
    def __init__(self, no: int, text: str):
        self.no = no
        self.text = text

    def fail(self, reason: str):
        raise ScenarioError(f"line {self.no}: {reason}")


def _parse_int(line: _Line, token: str) -> int:
    try:
        return int(token, 0)
    except ValueError:
        line.fail(f"expected integer, got {token!r}")


def _parse_hex(line: _Line, token: str, nbytes: int) -> bytes:
    try:
        value = bytes.fromhex(token)
    except ValueError:
        line.fail(f"invalid hex {token!r}")
    if len(value) != nbytes:
        line.fail(f"expected {nbytes} hex bytes, got {len(value)}")
    return value


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(str(exc)) from exc
    return parse_scenario(text, base_dir=path.parent)


def parse_scenario(text: str, base_dir: Path | None = None) -> Scenario:
    base_dir = base_dir or Path(".")
    scenario = Scenario(subscribers=[])
    section = None
    saw_header = False
    explicit_starts = False

    for no, raw_line in enumerate(text.splitlines(), start=1):
        line = _Line(no, raw_line.strip())
        if not line.text or line.text.startswith("#"):
            continue
        if not saw_header:
            if line.text != SCENARIO_HEADER:
                line.fail(f"expected header {SCENARIO_HEADER!r}")
            saw_header = True
            continue
        if line.text.startswith("[") and line.text.endswith("]"):
            section = line.text[1:-1]
            if section not in _SECTIONS:
                line.fail(f"unknown section [{section}]")
            continue
        if section is None:
            line.fail("content before any section")
        if section == "options":
            _parse_option(scenario, line)
        elif section == "registry":
            scenario.subscribers.append(_parse_subscriber(line))
        elif section == "links":
            src, dst, model = _parse_link(line)
            scenario.links[(src, dst)] = model
        elif section == "schedule":
            item = _parse_schedule(line)
            if isinstance(item, StartIcd):
                explicit_starts = True
            scenario.schedule.append(item)
        elif section == "adversary":
            scenario.adversary.append(_parse_adversary(line))
        elif section == "expect":
            scenario.expects.append(_parse_expect(line, base_dir))

    if not saw_header:
        raise ScenarioError("empty scenario file")
    if not explicit_starts:
        for i in range(len(scenario.subscribers)):
            scenario.schedule.append(StartIcd(f"icd-{i + 1}", at=0))
    return scenario


def _parse_option(scenario: Scenario, line: _Line) -> None:
    if "=" not in line.text:
        line.fail("expected key = value")
    key, _, value = (t.strip() for t in line.text.partition("="))
    if key == "backend":
        scenario.backend = value
    elif key == "max_time":
        scenario.max_time = _parse_int(line, value)
    elif key == "mpc_period":
        scenario.mpc_period = _parse_int(line, value)
    elif key == "wbrac_id":
        scenario.wbrac_id = _parse_int(line, value)
    else:
        line.fail(f"unknown option {key!r}")


def _parse_subscriber(line: _Line) -> SubscriberSpec:
    parts = line.text.split()
    if len(parts) != 6:
        line.fail(f"registry line needs 6 fields, got {len(parts)}")
    return SubscriberSpec(
        icd_in=_parse_int(line, parts[0]),
        esn=_parse_int(line, parts[1]),
        key=_parse_hex(line, parts[2], 32),
        sc_auth_k=_parse_hex(line, parts[3], 16),
        sd=_parse_hex(line, parts[4], 16),
        rmc=_parse_int(line, parts[5]),
    )


def _parse_link(line: _Line) -> tuple[str, str, LinkModel]:
    parts = line.text.split()
    if len(parts) < 2:
        line.fail("link line needs: <src> <dst> [delay=N] [drop=P] [dup=P]")
    kwargs = {}
    for token in parts[2:]:
        if "=" not in token:
            line.fail(f"expected key=value, got {token!r}")
        key, _, value = token.partition("=")
        if key == "delay":
            kwargs["delay_ms"] = _parse_int(line, value)
        elif key == "drop":
            kwargs["drop_prob"] = float(value)
        elif key == "dup":
            kwargs["dup_prob"] = float(value)
        else:
            line.fail(f"unknown link attribute {key!r}")
    return parts[0], parts[1], LinkModel(**kwargs)


def _targets(line: _Line, token: str) -> tuple[str, ...]:
    return tuple(t for t in token.split(",") if t)


def _parse_schedule(line: _Line):
    parts = line.text.split()
    try:
        if parts[0] == "start" and parts[2] == "at":
            return StartIcd(parts[1], at=_parse_int(line, parts[3]))
        if parts[0] == "rotate" and parts[1] == "at" and parts[3] == "to":
            return RotateMpc(at=_parse_int(line, parts[2]), targets=_targets(line, parts[4]))
        if parts[0] == "param-update" and parts[1] == "at" and parts[3] == "to":
            return SendParameterUpdate(
                at=_parse_int(line, parts[2]), targets=_targets(line, parts[4])
            )
    except IndexError:
        pass
    line.fail(f"unrecognized schedule line {line.text!r}")


def _parse_adversary(line: _Line):
    parts = line.text.split()
    try:
        if parts[0] == "capture":
            return CaptureMatching(wire.tag_by_name(parts[1]))
        if parts[0] == "replay" and parts[2] == "at":
            return ReplayCaptured(index=_parse_int(line, parts[1]), at=_parse_int(line, parts[3]))
        if parts[0] == "corrupt" and parts[2] == "bit":
            return CorruptBit(wire.tag_by_name(parts[1]), bit_index=_parse_int(line, parts[3]))
        if parts[0] == "inject" and parts[2] == "to" and parts[4] == "at":
            frame = wire.decode(bytes.fromhex(parts[1]))
            src = parts[7] if len(parts) >= 8 and parts[6] == "from" else "adversary"
            return Inject(frame=frame, to=parts[3], at=_parse_int(line, parts[5]), src=src)
    except IndexError:
        pass
    except (wire.WireError, ValueError) as exc:
        line.fail(f"bad adversary line: {exc}")
    line.fail(f"unrecognized adversary line {line.text!r}")


def _parse_expect(line: _Line, base_dir: Path):
    parts = line.text.split()
    try:
        if len(parts) == 3 and parts[1] == "reaches":
            return ("reaches", parts[0], parts[2])
        if parts[0] == "frame-count" and parts[2] in _FRAME_COUNT_OPS:
            return ("frame-count", parts[1], parts[2], _parse_int(line, parts[3]))
        if parts[0] == "trace-golden":
            return ("trace-golden", base_dir / parts[1])
    except IndexError:
        pass
    line.fail(f"unrecognized expectation {line.text!r}")


def check_expects(scenario: Scenario, sim, trace) -> list[str]:
    """Evaluate the [expect] assertions; return a list of failure messages."""
    failures = []
    for expect in scenario.expects:
        kind = expect[0]
        if kind == "reaches":
            _, agent_id, target = expect
            agent = sim.agents.get(agent_id)
            if agent is None:
                failures.append(f"reaches: unknown agent {agent_id!r}")
            elif getattr(agent, "state_name", "-") != target and not any(
                e.receiver == agent_id and e.note.endswith(f"-> {target}")
                for e in trace.entries
            ):
                failures.append(
                    f"{agent_id} never reached {target} "
                    f"(final state {getattr(agent, 'state_name', '-')})"
                )
        elif kind == "frame-count":
            _, tag, op, want = expect
            got = trace.frame_count(tag)
            if not _FRAME_COUNT_OPS[op](got, want):
                failures.append(f"frame-count {tag}: got {got}, wanted {op} {want}")
        elif kind == "trace-golden":
            _, path = expect
            try:
                golden = Path(path).read_text()
            except OSError as exc:
                failures.append(f"trace-golden: {exc}")
                continue
            if trace.serialize() != golden:
                failures.append(f"trace differs from golden file {path}")
    return failures
