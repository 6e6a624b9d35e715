"""State machine for the ICD (internet connected device).

The device initiates activation, assembles its GUID, answers update-value
and unique-challenge flows, and enforces the 1 s confirmation timer.  The
new service data computed during an update is committed exactly once (on a
matching confirmation order) or discarded exactly once (mismatch/timeout).
"""

from __future__ import annotations

from dataclasses import dataclass

from . import crypto, wire
from .agent import NotIdle, Transition, unexpected

CONFIRM_TIMEOUT_MS = 1000  # confirmation order must arrive within 1 s of the ack


# -- states -----------------------------------------------------------------


@dataclass(frozen=True)
class Idle:
    name = "Idle"


@dataclass(frozen=True)
class AwaitingAuthResult:
    name = "AwaitingAuthResult"


@dataclass(frozen=True)
class UpdateAwaitingAck:
    sd_new: crypto.SdPair
    to_map: crypto.ToMap
    local_sign: crypto.AuthSignMap
    name = "UpdateAwaitingAck"


@dataclass(frozen=True)
class UpdateAwaitingConfirmation:
    sd_new: crypto.SdPair
    local_sign: crypto.AuthSignMap
    deadline: int  # virtual ms; arrival at exactly the deadline is in time
    name = "UpdateAwaitingConfirmation"


@dataclass(frozen=True)
class Authenticated:
    session: crypto.SessionKey
    name = "Authenticated"


@dataclass(frozen=True)
class Denied:
    name = "Denied"


@dataclass
class IcdConfig:
    """Provisioned material plus the mutable MPC/RMC mirrors."""

    wgie: crypto.WgieRecord
    sc_auth_k: crypto.ScAuthKey
    sd: crypto.SdPair
    mpc: crypto.Mpc
    rmc: crypto.Rmc
    wbrac_id: int  # provisioned 64-bit network identifier for unique challenges


class IcdAgent:
    def __init__(
        self,
        agent_id: str,
        cfg: IcdConfig,
        map_id: str,
        rng,
        backend: crypto.PrfBackend = crypto.DEFAULT_BACKEND,
    ):
        self.agent_id = agent_id
        self.cfg = cfg
        self.map_id = map_id
        self.rng = rng
        self.backend = backend
        self.state = Idle()

    # -- helpers --

    @property
    def state_name(self) -> str:
        return self.state.name

    def _aac(self, sd: crypto.SdPair) -> crypto.Aac:
        return crypto.authenticate_signature(
            sd, self.cfg.wgie.esn, self.cfg.wgie.icd_in, self.cfg.sc_auth_k, self.backend
        )

    def _auth_request(self) -> wire.AuthRequest:
        guid = crypto.compose_guid(self._aac(self.cfg.sd), self.cfg.mpc, self.cfg.rmc)
        return wire.AuthRequest(self.cfg.wgie.icd_in, self.cfg.wgie.esn, guid)

    # -- transitions --

    def start(self, now: int) -> Transition:
        """Send the secure activation signal followed by the GUID."""
        if not isinstance(self.state, Idle):
            raise NotIdle(f"start() in {self.state_name}")
        self.state = AwaitingAuthResult()
        return Transition(
            out=[
                (self.map_id, wire.SecureActivation(self.cfg.wgie.icd_in)),
                (self.map_id, self._auth_request()),
            ]
        )

    def handle(self, msg: wire.WireMessage, now: int) -> Transition:
        cfg = self.cfg
        state = self.state

        if isinstance(msg, wire.AccessParameterMessage):
            cfg.mpc = crypto.Mpc(msg.mpc)
            return Transition(note="mpc-updated")

        if isinstance(msg, wire.ParameterUpdateOrder):
            cfg.rmc = cfg.rmc.incremented()
            return Transition(note="rmc-incremented")

        if isinstance(msg, wire.AuthAccept):
            if isinstance(state, AwaitingAuthResult):
                self.state = Authenticated(crypto.derive_session_key(cfg.sd, self.backend))
                return Transition(note="authenticated")
            return unexpected(self.state_name, msg)

        if isinstance(msg, wire.UpdateOrder):
            if isinstance(state, Denied):
                return unexpected(self.state_name, msg)
            aac_from_rand = crypto.authenticate_signature(
                crypto.SdPair.from_packed(msg.rand),
                cfg.wgie.esn,
                cfg.wgie.icd_in,
                self.sc_auth_k,
                self.backend,
            )
            sd_new = crypto.sd_generation(aac_from_rand, cfg.wgie.esn, self.sc_auth_k, self.backend)
            to_map = crypto.gen_to_map(self.rng)
            local_sign = crypto.authorization_signature(
                sd_new, to_map.bits, cfg.wgie.esn, cfg.wgie.icd_in, self.backend
            )
            self.state = UpdateAwaitingAck(sd_new, to_map, local_sign)
            return Transition(out=[(self.map_id, wire.MobileAccessChallengeOrder(to_map.bits))])

        if isinstance(msg, wire.ChallengeAck):
            if isinstance(state, UpdateAwaitingAck):
                deadline = now + CONFIRM_TIMEOUT_MS
                self.state = UpdateAwaitingConfirmation(state.sd_new, state.local_sign, deadline)
                return Transition(tick_at=deadline + 1)
            return unexpected(self.state_name, msg)

        if isinstance(msg, wire.MapChallengeResponseOrder):
            if isinstance(state, UpdateAwaitingConfirmation):
                if now > state.deadline:
                    self.state = Idle()
                    return Transition(note="update-timeout")
                if msg.auth_sign_map == state.local_sign.bits:
                    cfg.sd = state.sd_new
                    self.state = AwaitingAuthResult()
                    # re-authenticate with the committed service data
                    return Transition(
                        out=[
                            (self.map_id, wire.UpdateConfirmation()),
                            (self.map_id, self._auth_request()),
                        ],
                        note="update-committed",
                    )
                self.state = Idle()
                return Transition(
                    out=[(self.map_id, wire.UpdateRejection())], note="update-rejected"
                )
            return unexpected(self.state_name, msg)

        if isinstance(msg, wire.AuthenticationChallenge):
            composite = crypto.compose_unique_challenge(crypto.Wmap(msg.wmap), cfg.wbrac_id)
            answer = crypto.authorization_signature(
                cfg.sd, composite, cfg.wgie.esn, cfg.wgie.icd_in, self.backend
            )
            return Transition(out=[(self.map_id, wire.AuthChallengeAnswer(answer.bits))])

        if isinstance(msg, wire.AccessDenied):
            self.state = Denied()
            return Transition(note=f"denied reason={msg.reason}")

        return unexpected(self.state_name, msg)

    def tick(self, now: int) -> Transition:
        if isinstance(self.state, UpdateAwaitingConfirmation) and now > self.state.deadline:
            self.state = Idle()
            return Transition(note="update-timeout")
        return Transition()

    @property
    def sc_auth_k(self) -> crypto.ScAuthKey:
        return self.cfg.sc_auth_k
