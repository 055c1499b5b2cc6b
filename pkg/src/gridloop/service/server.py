"""Live run server: telemetry streaming and mediated operator commands.

One asyncio loop owns everything. The engine advances in its own task
and never blocks on client I/O: subscribers get per-connection bounded
queues, and a subscriber that falls behind is disconnected with a
terminal event rather than stalling the run. Commands enter the engine
only through its boundary-applied event queue, so the physics digest of
a scenario is unchanged by any number of watch-only clients.
"""

from __future__ import annotations

import asyncio
import dataclasses
import os
import time

from ..control.supervisor import ControllerDecision, OperatorCommand, controller_step
from ..devices.telemetry import TelemetryFrame
from ..engine.scenario import COMMAND_KINDS, Scenario
from ..engine.simulation import Simulation, SimulationRecord
from .protocol import PROTO_VERSION, MessageDecoder, ProtocolError, encode_message

TOKEN_ENV = "GRIDLOOP_TOKEN"
QUEUE_BOUND = 256
DEFAULT_DECIMATION = 20

_INJECTED_KINDS = ("load_step", "relay_force", "generator_trip",
                   "sensor_bias")


class _Client:
    def __init__(self, writer: asyncio.StreamWriter):
        self.writer = writer
        self.queue: asyncio.Queue = asyncio.Queue(maxsize=QUEUE_BOUND)
        self.pump: asyncio.Task | None = None
        self.authed = False
        self.subscribed = False
        self.dropped = False


class LiveServer:
    """Serves one scenario run to any number of console clients."""

    def __init__(self, scenario: Scenario, host: str = "127.0.0.1",
                 port: int = 0, pace: bool = True,
                 decimation: int = DEFAULT_DECIMATION,
                 token: str | None = None):
        self.sim = Simulation(scenario)
        self.host = host
        self.port = port
        self.pace = pace
        self.decimation = max(1, decimation)
        self.token = token if token is not None else os.environ.get(TOKEN_ENV)
        self.address: tuple[str, int] | None = None
        self.record: SimulationRecord | None = None
        self._clients: set[_Client] = set()
        self._started = asyncio.Event()
        self._finished = asyncio.Event()

    # -- broadcast ----------------------------------------------------

    def publish_frame(self, frame: TelemetryFrame,
                      decision: ControllerDecision) -> None:
        """Queue one telemetry/decision pair to every subscriber."""
        telemetry = encode_message({"kind": "telemetry",
                                    "frame": frame.as_dict()})
        decision_msg = encode_message(self._decision_message(
            frame.timestamp, decision, self.sim.ctrl_state))
        for client in list(self._clients):
            if not client.subscribed or client.dropped:
                continue
            try:
                client.queue.put_nowait(telemetry)
                client.queue.put_nowait(decision_msg)
            except asyncio.QueueFull:
                self._drop_slow(client)

    def _decision_message(self, t: float, decision: ControllerDecision,
                          state) -> dict:
        return {
            "kind": "decision",
            "t": t,
            "modes": {g: m.value for g, m in state.modes.items()},
            "system_mode": state.system_mode.value,
            "excitation_duty": decision.excitation_duty,
            "armature_duty": decision.armature_duty,
            "relay_commands": [list(c) for c in decision.relay_commands],
            "breaker_commands": [list(c) for c in decision.breaker_commands],
            "sync_close": (list(decision.sync_close)
                           if decision.sync_close else None),
            "annotations": list(decision.annotations),
        }

    def _drop_slow(self, client: _Client) -> None:
        client.dropped = True
        client.subscribed = False
        if client.pump is not None:
            client.pump.cancel()
        try:
            client.writer.write(encode_message(
                {"kind": "event", "event": "dropped",
                 "reason": f"subscriber backlog exceeded {QUEUE_BOUND}"}))
            client.writer.close()
        except ConnectionError:
            pass

    def _broadcast_event(self, message: dict) -> None:
        payload = encode_message(message)
        for client in list(self._clients):
            if client.subscribed and not client.dropped:
                try:
                    client.queue.put_nowait(payload)
                except asyncio.QueueFull:
                    self._drop_slow(client)

    # -- commands -----------------------------------------------------

    def _inject(self, command: str, params: dict,
                request_id: str | None) -> tuple[bool, str]:
        if command in _INJECTED_KINDS:
            return self.sim.inject_event(command, dict(params))
        if command in COMMAND_KINDS:
            payload = {"command": command,
                       "target": params.get("target")}
            if params.get("value") is not None:
                payload["value"] = params["value"]
            if request_id is not None:
                payload["request_id"] = request_id
            return self.sim.inject_event("operator_command", payload)
        return False, f"unknown command {command!r}"

    def _whatif(self, command: str, params: dict) -> tuple[dict | None, str]:
        if command not in COMMAND_KINDS:
            return None, f"whatif supports operator commands, not {command!r}"
        frame = self.sim.latest_frame
        if frame is None:
            return None, "no frame sampled yet"
        state = self.sim.ctrl_state.copy()
        state.pending_commands.append(OperatorCommand(
            kind=command, target=str(params.get("target")),
            value=params.get("value")))
        probe = dataclasses.replace(
            frame, timestamp=frame.timestamp + 0.5 * self.sim.period)
        after, decision = controller_step(probe, state, self.sim.ctrl_cfg)
        return self._decision_message(probe.timestamp, decision, after), ""

    # -- client sessions ----------------------------------------------

    async def _pump(self, client: _Client) -> None:
        try:
            while True:
                payload = await client.queue.get()
                if payload is None:
                    break
                client.writer.write(payload)
                await client.writer.drain()
        except (ConnectionError, asyncio.CancelledError):
            pass
        finally:
            try:
                client.writer.close()
            except ConnectionError:
                pass

    async def _handle_client(self, reader: asyncio.StreamReader,
                             writer: asyncio.StreamWriter) -> None:
        client = _Client(writer)
        self._clients.add(client)
        decoder = MessageDecoder()
        try:
            while not reader.at_eof():
                data = await reader.read(4096)
                if not data:
                    break
                try:
                    messages = decoder.feed(data)
                except ProtocolError as exc:
                    writer.write(encode_message(
                        {"kind": "reject", "request_id": None,
                         "reason": str(exc)}))
                    await writer.drain()
                    break
                for message in messages:
                    if not await self._dispatch(client, message):
                        return
        except ConnectionError:
            pass
        finally:
            self._clients.discard(client)
            if client.pump is not None:
                client.queue.put_nowait(None)
            else:
                try:
                    writer.close()
                except ConnectionError:
                    pass

    async def _dispatch(self, client: _Client, message: dict) -> bool:
        kind = message.get("kind")
        request_id = message.get("request_id")

        def send(reply: dict) -> None:
            client.writer.write(encode_message(reply))

        if not client.authed:
            if kind != "hello":
                send({"kind": "reject", "request_id": request_id,
                      "reason": "handshake required first"})
                await client.writer.drain()
                return False
            if message.get("proto_version") != PROTO_VERSION:
                send({"kind": "reject", "request_id": request_id,
                      "reason": f"proto_version must be {PROTO_VERSION}"})
                await client.writer.drain()
                return False
            if self.token and message.get("token") != self.token:
                send({"kind": "reject", "request_id": request_id,
                      "reason": "bad token"})
                await client.writer.drain()
                return False
            client.authed = True
            send({"kind": "hello", "proto_version": PROTO_VERSION,
                  "name": self.sim.scenario.name,
                  "control_period_s": self.sim.period,
                  "decimation": self.decimation})
            await client.writer.drain()
            return True

        if kind == "subscribe":
            client.subscribed = True
            if client.pump is None:
                client.pump = asyncio.create_task(self._pump(client))
            send({"kind": "ack", "request_id": request_id,
                  "note": "subscribed"})
            await client.writer.drain()
            return True

        if kind == "command":
            ok, note = self._inject(str(message.get("command")),
                                    message.get("params") or {}, request_id)
            if ok:
                send({"kind": "ack", "request_id": request_id, "note": note})
            else:
                send({"kind": "reject", "request_id": request_id,
                      "reason": note})
            await client.writer.drain()
            return True

        if kind == "whatif":
            result, reason = self._whatif(str(message.get("command")),
                                          message.get("params") or {})
            if result is None:
                send({"kind": "reject", "request_id": request_id,
                      "reason": reason})
            else:
                send({"kind": "whatif_result", "request_id": request_id,
                      "decision": result})
            await client.writer.drain()
            return True

        send({"kind": "reject", "request_id": request_id,
              "reason": f"unknown kind {kind!r}"})
        await client.writer.drain()
        return True

    # -- engine -------------------------------------------------------

    async def _run_engine(self) -> None:
        start = time.monotonic()
        index = 0
        while not self.sim.finished:
            result = self.sim.step_period()
            if result is None:
                break
            frame, decision = result
            if index % self.decimation == 0:
                self.publish_frame(frame, decision)
            index += 1
            if self.pace:
                # Pace to the wall clock in coarse chunks: sub-ms sleeps
                # land at the loop's timer resolution and oversleep, after
                # which a catch-up sprint would starve client I/O. Sleep
                # only once a few ms ahead, yield periodically otherwise,
                # and re-anchor after a long stall instead of sprinting.
                target = start + index * self.sim.period
                delay = target - time.monotonic()
                if delay > 0.002:
                    await asyncio.sleep(delay)
                elif delay < -0.1:
                    start = time.monotonic() - index * self.sim.period
                    await asyncio.sleep(0)
                elif index % 10 == 0:
                    await asyncio.sleep(0)
            elif index % 20 == 0:
                await asyncio.sleep(0)
        self.record = self.sim.finalize()
        self._broadcast_event({
            "kind": "event", "event": "finished",
            "digest": self.record.digest,
            "diagnostic": self.record.diagnostic})
        for client in list(self._clients):
            if client.pump is not None:
                client.queue.put_nowait(None)
        self._finished.set()

    async def serve(self) -> SimulationRecord:
        server = await asyncio.start_server(self._handle_client,
                                            self.host, self.port)
        self.address = server.sockets[0].getsockname()[:2]
        self._started.set()
        engine = asyncio.create_task(self._run_engine())
        try:
            await engine
            # allow pumps to flush the terminal event
            await asyncio.sleep(0)
        finally:
            server.close()
            await server.wait_closed()
        assert self.record is not None
        return self.record
