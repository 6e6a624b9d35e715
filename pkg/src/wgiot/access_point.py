"""State machine for the mobile access point (MAP).

The access point verifies presented GUIDs against expectations provisioned
by the WBRAC (it never holds device secrets), relays challenge traffic
between device and WBRAC, and chooses between the unique-challenge and
update-value remediation paths when a comparison fails.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import crypto, wire
from .agent import ProtocolError, Transition, unexpected

REASON_VERIFY_FAILED = 0x01
REASON_UNKNOWN_ICD = 0x02


class UnknownIcd(ProtocolError):
    pass


# Remediation actions selectable by policy.
CHALLENGE = "challenge"
UPDATE = "update"
DENY = "deny"


@dataclass
class MapPolicy:
    """Maps the set of mismatched GUID fields to a remediation action.

    Default: any mismatch involving MPC or RMC starts an update-value run
    (those drift by design as the network reissues them); an AAC-only
    mismatch gets a unique challenge; all three wrong is denied outright.
    """

    rules: dict[frozenset, str] = field(default_factory=dict)
    on_challenge_fail: str = DENY

    def action_for(self, mismatch: frozenset) -> str:
        if mismatch in self.rules:
            return self.rules[mismatch]
        if mismatch == frozenset({"AAC", "MPC", "RMC"}):
            return DENY
        if "MPC" in mismatch or "RMC" in mismatch:
            return UPDATE
        return CHALLENGE


@dataclass
class PendingUpdate:
    rand: bytes
    expected_sign: crypto.AuthSignMap | None = None
    next_provision: wire.MapProvision | None = None


@dataclass
class MapRecord:
    """Per-device expectations cached from WBRAC provisioning."""

    icd_agent_id: str
    expected_aac: crypto.Aac
    expected_mpc: crypto.Mpc
    expected_rmc: crypto.Rmc
    challenge_wmap: crypto.Wmap | None = None
    challenge_sign: crypto.AuthSignMap | None = None
    challenge_outstanding: bool = False
    pending: PendingUpdate | None = None


class MapAgent:
    def __init__(self, agent_id: str, wbrac_id: str, rng, policy: MapPolicy | None = None):
        self.agent_id = agent_id
        self.wbrac_id = wbrac_id
        self.rng = rng
        self.policy = policy or MapPolicy()
        self.records: dict[int, MapRecord] = {}
        self._by_agent: dict[str, int] = {}

    state_name = "-"

    def provision(self, icd_in: int, record: MapRecord) -> None:
        self.records[icd_in] = record
        self._by_agent[record.icd_agent_id] = icd_in

    # -- verification --

    def verify(self, icd_in: int, req: wire.AuthRequest) -> frozenset:
        """Return the set of mismatched GUID fields; empty means accept."""
        rec = self.records.get(icd_in)
        if rec is None:
            raise UnknownIcd(icd_in)
        guid = crypto.decompose_guid(req.guid)
        mismatch = set()
        if guid.aac != rec.expected_aac:
            mismatch.add("AAC")
        if guid.mpc != rec.expected_mpc:
            mismatch.add("MPC")
        if guid.rmc != rec.expected_rmc:
            mismatch.add("RMC")
        return frozenset(mismatch)

    # -- transitions --

    def handle(self, sender: str, msg: wire.WireMessage, now: int) -> Transition:
        if isinstance(msg, wire.SecureActivation):
            return Transition(note="activation")

        if isinstance(msg, wire.AccessParameterMessage):
            for rec in self.records.values():
                rec.expected_mpc = crypto.Mpc(msg.mpc)
            return Transition(note="mpc-updated")

        if isinstance(msg, wire.ParameterUpdateOrder):
            for rec in self.records.values():
                rec.expected_rmc = rec.expected_rmc.incremented()
            return Transition(note="rmc-incremented")

        if isinstance(msg, wire.AuthRequest):
            return self._handle_auth_request(sender, msg)

        if isinstance(msg, wire.UpdateMessage):
            rec = self.records.get(msg.icd_in)
            if rec is None:
                return Transition(note=f"update for unknown icd {msg.icd_in}")
            rec.pending = PendingUpdate(rand=msg.rand)
            return Transition(out=[(rec.icd_agent_id, wire.UpdateOrder(msg.rand))])

        if isinstance(msg, wire.MobileAccessChallengeOrder):
            icd_in = self._by_agent.get(sender)
            if icd_in is None:
                return unexpected(self.state_name, msg)
            return Transition(
                out=[
                    (sender, wire.ChallengeAck()),
                    (self.wbrac_id, wire.MapChallengeForward(icd_in, msg.to_map)),
                ]
            )

        if isinstance(msg, wire.MapChallengeResponse):
            rec = self._unique_pending(want_sign=True)
            if rec is None:
                return unexpected(self.state_name, msg)
            rec.pending.expected_sign = crypto.AuthSignMap(msg.auth_sign_map)
            return Transition(
                out=[(rec.icd_agent_id, wire.MapChallengeResponseOrder(msg.auth_sign_map))]
            )

        if isinstance(msg, wire.MapProvision):
            rec = self.records.get(msg.icd_in)
            if rec is None:
                return Transition(note=f"provision for unknown icd {msg.icd_in}")
            if rec.pending is not None:
                rec.pending.next_provision = msg
                return Transition(note="provision-stashed")
            self._apply_provision(rec, msg)
            return Transition(note="provision-applied")

        if isinstance(msg, wire.UpdateConfirmation):
            icd_in = self._by_agent.get(sender)
            rec = self.records.get(icd_in) if icd_in is not None else None
            if rec is None or rec.pending is None:
                return unexpected(self.state_name, msg)
            if rec.pending.next_provision is not None:
                self._apply_provision(rec, rec.pending.next_provision)
            rec.pending = None
            return Transition(
                out=[(self.wbrac_id, wire.UpdateConfirmation())], note="update-committed"
            )

        if isinstance(msg, wire.UpdateRejection):
            icd_in = self._by_agent.get(sender)
            rec = self.records.get(icd_in) if icd_in is not None else None
            if rec is None or rec.pending is None:
                return unexpected(self.state_name, msg)
            rec.pending = None
            return Transition(
                out=[(self.wbrac_id, wire.UpdateRejection())], note="update-discarded"
            )

        if isinstance(msg, wire.AuthChallengeAnswer):
            return self._handle_challenge_answer(sender, msg)

        return unexpected(self.state_name, msg)

    def tick(self, now: int) -> Transition:
        return Transition()

    # -- internals --

    def _handle_auth_request(self, sender: str, req: wire.AuthRequest) -> Transition:
        try:
            mismatch = self.verify(req.icd_in, req)
        except UnknownIcd:
            return Transition(
                out=[(sender, wire.AccessDenied(REASON_UNKNOWN_ICD))], note="unknown-icd"
            )
        except crypto.BadLength as exc:
            return Transition(note=f"malformed guid: {exc}")
        rec = self.records[req.icd_in]
        if not mismatch:
            return Transition(out=[(sender, wire.AuthAccept())], note="guid-match")

        action = self.policy.action_for(mismatch)
        note = "mismatch " + ",".join(sorted(mismatch))
        if action == CHALLENGE and rec.challenge_wmap is not None:
            rec.challenge_outstanding = True
            return Transition(
                out=[(sender, wire.AuthenticationChallenge(rec.challenge_wmap.bits))],
                note=note + " -> challenge",
            )
        if action == UPDATE:
            if rec.pending is not None:
                return Transition(note=note + " -> update already pending")
            # refresh the device's stale MPC alongside the update request
            return Transition(
                out=[
                    (self.wbrac_id, wire.UpdateRequest(req.icd_in)),
                    (sender, wire.AccessParameterMessage(rec.expected_mpc.bits)),
                ],
                note=note + " -> update",
            )
        return Transition(
            out=[(sender, wire.AccessDenied(REASON_VERIFY_FAILED))], note=note + " -> deny"
        )

    def _handle_challenge_answer(self, sender: str, msg: wire.AuthChallengeAnswer) -> Transition:
        icd_in = self._by_agent.get(sender)
        rec = self.records.get(icd_in) if icd_in is not None else None
        if rec is None or not rec.challenge_outstanding or rec.challenge_sign is None:
            return unexpected(self.state_name, msg)
        rec.challenge_outstanding = False
        if msg.auth_sign_map == rec.challenge_sign.bits:
            return Transition(out=[(sender, wire.AuthAccept())], note="challenge-passed")
        if self.policy.on_challenge_fail == UPDATE and rec.pending is None:
            return Transition(
                out=[(self.wbrac_id, wire.UpdateRequest(icd_in))],
                note="challenge-failed -> update",
            )
        return Transition(
            out=[(sender, wire.AccessDenied(REASON_VERIFY_FAILED))],
            note="challenge-failed -> deny",
        )

    def _apply_provision(self, rec: MapRecord, prov: wire.MapProvision) -> None:
        rec.expected_aac = crypto.Aac(prov.expected_aac)
        rec.challenge_wmap = crypto.Wmap(prov.wmap)
        rec.challenge_sign = crypto.AuthSignMap(prov.challenge_sign)
        rec.challenge_outstanding = False

    def _unique_pending(self, want_sign: bool) -> MapRecord | None:
        """The response frames carry no device id; attribute them to the single
        record with a pending update (lowest icd_in on the rare tie)."""
        candidates = [
            rec
            for _, rec in sorted(self.records.items())
            if rec.pending is not None and (not want_sign or rec.pending.expected_sign is None)
        ]
        return candidates[0] if candidates else None
