"""Live server: handshake, streaming, mediated commands."""

import asyncio

import pytest

from gridloop.engine.scenario import parse_scenario
from gridloop.engine.simulation import Simulation
from gridloop.service.protocol import MessageDecoder, encode_message
from gridloop.service.server import LiveServer

from conftest import base_doc


class Console:
    """Minimal test client for the live protocol."""

    def __init__(self, reader, writer):
        self.reader = reader
        self.writer = writer
        self.decoder = MessageDecoder()
        self.inbox = []

    @classmethod
    async def connect(cls, address):
        reader, writer = await asyncio.open_connection(*address)
        return cls(reader, writer)

    async def send(self, message):
        self.writer.write(encode_message(message))
        await self.writer.drain()

    async def recv(self, timeout=5.0):
        while not self.inbox:
            data = await asyncio.wait_for(self.reader.read(4096), timeout)
            if not data:
                raise ConnectionError("server closed the stream")
            self.inbox.extend(self.decoder.feed(data))
        return self.inbox.pop(0)

    async def recv_until(self, predicate, timeout=5.0):
        for _ in range(10000):
            message = await self.recv(timeout)
            if predicate(message):
                return message
        raise AssertionError("predicate never satisfied")

    async def hello(self, token=None, proto_version=1):
        message = {"kind": "hello", "proto_version": proto_version}
        if token is not None:
            message["token"] = token
        await self.send(message)
        return await self.recv()

    async def close(self):
        self.writer.close()
        try:
            await self.writer.wait_closed()
        except (ConnectionError, OSError):
            pass


async def start_server(doc, **kwargs):
    server = LiveServer(parse_scenario(doc), **kwargs)
    task = asyncio.create_task(server.serve())
    await server._started.wait()
    return server, task


def test_requests_before_hello_are_rejected():
    async def main():
        server, task = await start_server(base_doc(), pace=False)
        console = await Console.connect(server.address)
        await console.send({"kind": "subscribe"})
        reply = await console.recv()
        assert reply["kind"] == "reject"
        assert reply["reason"] == "handshake required first"
        await console.close()
        await task

    asyncio.run(main())


def test_hello_checks_protocol_version():
    async def main():
        server, task = await start_server(base_doc(), pace=False)
        console = await Console.connect(server.address)
        reply = await console.hello(proto_version=2)
        assert reply["kind"] == "reject"
        assert "proto_version" in reply["reason"]
        await console.close()
        await task

    asyncio.run(main())


def test_token_gate():
    async def main():
        server, task = await start_server(base_doc(duration=0.3),
                                          pace=False, token="sesame")
        bare = await Console.connect(server.address)
        reply = await bare.hello()
        assert reply == {"kind": "reject", "request_id": None,
                         "reason": "bad token"}
        await bare.close()
        keyed = await Console.connect(server.address)
        reply = await keyed.hello(token="sesame")
        assert reply["kind"] == "hello"
        assert reply["name"] == "test"
        assert reply["control_period_s"] == 1.0e-3
        await keyed.close()
        await task

    asyncio.run(main())


def test_subscriber_receives_decimated_pairs():
    async def main():
        server, task = await start_server(base_doc(duration=0.4), pace=True)
        console = await Console.connect(server.address)
        hello = await console.hello()
        assert hello["decimation"] == 20
        await console.send({"kind": "subscribe", "request_id": "s1"})
        ack = await console.recv()
        assert ack == {"kind": "ack", "request_id": "s1",
                       "note": "subscribed"}
        messages = [await console.recv() for _ in range(6)]
        kinds = [m["kind"] for m in messages]
        assert kinds[0::2] == ["telemetry"] * 3
        assert kinds[1::2] == ["decision"] * 3
        frames = [m["frame"] for m in messages[0::2]]
        times = [f["timestamp"] for f in frames]
        assert times == sorted(times)
        assert times[1] - times[0] == pytest.approx(0.02)
        assert set(frames[0]["generators"]) == {"gen1", "gen2"}
        decision = messages[1]
        assert decision["t"] == frames[0]["timestamp"]
        assert decision["modes"] == {"gen1": "running", "gen2": "running"}
        assert decision["system_mode"] == "normal"
        await console.close()
        await task

    asyncio.run(main())


def test_operator_command_round_trip():
    async def main():
        server, task = await start_server(base_doc(duration=0.4), pace=True)
        console = await Console.connect(server.address)
        await console.hello()
        await console.send({"kind": "subscribe"})
        await console.recv()
        await console.send({"kind": "command", "command": "relay_set",
                            "params": {"target": "L3", "value": True},
                            "request_id": "c7"})
        ack = await console.recv_until(lambda m: m["kind"] in ("ack",
                                                               "reject"))
        assert ack == {"kind": "ack", "request_id": "c7", "note": "queued"}
        seen = await console.recv_until(
            lambda m: m["kind"] == "telemetry"
            and m["frame"]["relays"]["L3"])
        assert seen["frame"]["relays"]["L3"] is True
        await console.close()
        record = await task
        injected = [e for e in record.events if e.source == "injected"]
        assert len(injected) == 1
        assert injected[0].kind == "operator_command"
        assert injected[0].params["command"] == "relay_set"
        assert injected[0].params["request_id"] == "c7"

    asyncio.run(main())


def test_plant_event_command_is_injected_directly():
    async def main():
        server, task = await start_server(base_doc(duration=0.3), pace=True)
        console = await Console.connect(server.address)
        await console.hello()
        await console.send({"kind": "command", "command": "load_step",
                            "params": {"relay": "L4", "closed": True}})
        ack = await console.recv()
        assert ack["kind"] == "ack"
        await console.close()
        record = await task
        assert any(e.kind == "load_step" and e.source == "injected"
                   for e in record.events)

    asyncio.run(main())


def test_malformed_command_rejected():
    async def main():
        server, task = await start_server(base_doc(duration=0.3), pace=True)
        console = await Console.connect(server.address)
        await console.hello()
        await console.send({"kind": "command", "command": "load_step",
                            "params": {"relay": "L9", "closed": True},
                            "request_id": "bad"})
        reply = await console.recv()
        assert reply["kind"] == "reject"
        assert reply["request_id"] == "bad"
        await console.send({"kind": "command", "command": "warp",
                            "params": {}})
        reply = await console.recv()
        assert reply["reason"] == "unknown command 'warp'"
        await console.close()
        record = await task
        assert record.events == []

    asyncio.run(main())


def test_whatif_answers_without_touching_the_run():
    async def main():
        offline = Simulation(parse_scenario(base_doc(duration=0.3))).run()
        server, task = await start_server(base_doc(duration=0.3), pace=True)
        console = await Console.connect(server.address)
        await console.hello()
        await asyncio.sleep(0.02)  # let a frame land
        await console.send({"kind": "whatif", "command": "generator_trip",
                            "params": {"target": "gen2"},
                            "request_id": "w1"})
        reply = await console.recv()
        assert reply["kind"] == "whatif_result"
        assert reply["request_id"] == "w1"
        hypothetical = reply["decision"]
        assert hypothetical["modes"]["gen2"] == "tripped"
        assert ["brk_gen2", "open"] in hypothetical["breaker_commands"]
        await console.close()
        record = await task
        # the probe never leaked into the live run
        assert record.events == []
        assert record.digest == offline.digest
        assert "gen2:running" in record.decision_lines[-1]

    asyncio.run(main())


def test_whatif_rejects_plant_events():
    async def main():
        server, task = await start_server(base_doc(duration=0.3), pace=True)
        console = await Console.connect(server.address)
        await console.hello()
        await asyncio.sleep(0.02)
        await console.send({"kind": "whatif", "command": "load_step",
                            "params": {"relay": "L4", "closed": True}})
        reply = await console.recv()
        assert reply["kind"] == "reject"
        assert "whatif supports operator commands" in reply["reason"]
        await console.close()
        await task

    asyncio.run(main())


def test_unknown_kind_rejected_after_auth():
    async def main():
        server, task = await start_server(base_doc(duration=0.3), pace=True)
        console = await Console.connect(server.address)
        await console.hello()
        await console.send({"kind": "dance"})
        reply = await console.recv()
        assert reply["reason"] == "unknown kind 'dance'"
        await console.close()
        await task

    asyncio.run(main())


def test_watching_changes_nothing_and_reports_the_digest():
    async def main():
        offline = Simulation(parse_scenario(base_doc(duration=0.3))).run()
        server, task = await start_server(base_doc(duration=0.3),
                                          pace=False)
        console = await Console.connect(server.address)
        await console.hello()
        await console.send({"kind": "subscribe"})
        finished = await console.recv_until(
            lambda m: m.get("event") == "finished")
        assert finished["digest"] == offline.digest
        assert finished["diagnostic"] is None
        record = await task
        assert record.digest == offline.digest
        with pytest.raises((ConnectionError, asyncio.TimeoutError)):
            while True:
                await console.recv(timeout=1.0)
        await console.close()

    asyncio.run(main())

    # a second bare run still reproduces the same digest
    again = Simulation(parse_scenario(base_doc(duration=0.3))).run()
    offline = Simulation(parse_scenario(base_doc(duration=0.3))).run()
    assert again.digest == offline.digest
