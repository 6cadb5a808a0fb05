"""Harness tests: scenarios, experiments, replay verification, live server."""

import json
import socket

import pytest

from tendonhand.experiments import d1_scenario, run_experiment
from tendonhand.replay import replay
from tendonhand.scenario import Disturbance, Scenario, load_scenario, save_scenario
from tendonhand.server import SessionServer
from tendonhand.telemetry import TELEMETRY_COLUMNS, read_telemetry


class TestScenario:
    def test_round_trip(self, tmp_path):
        scen = d1_scenario(seed=3)
        path = tmp_path / "scen.json"
        save_scenario(scen, path)
        back = load_scenario(path)
        assert back == scen

    def test_closure_interpolation(self):
        scen = Scenario(gesture_trace=((0.0, 180.0), (2.0, 100.0), (4.0, 100.0)))
        assert scen.closure_angle_at(-1.0) == 180.0
        assert scen.closure_angle_at(1.0) == pytest.approx(140.0)
        assert scen.closure_angle_at(9.0) == 100.0

    def test_validation(self):
        with pytest.raises(ValueError):
            Scenario(duration=-1.0, gesture_trace=((0.0, 180.0),))
        with pytest.raises(ValueError):
            Disturbance(time=0.0, kind="teleport", magnitude=1.0)
        with pytest.raises(ValueError):
            Scenario(
                gesture_trace=((0.0, 180.0),),
                disturbances=(
                    Disturbance(time=5.0, kind="induced_slip", magnitude=1.0),
                    Disturbance(time=1.0, kind="induced_slip", magnitude=1.0),
                ),
            )


@pytest.fixture(scope="module")
def a1_result(tmp_path_factory):
    out = tmp_path_factory.mktemp("a1")
    return run_experiment("A1", None, out), out


class TestExperimentA1:

    def test_d_type_profile1_decouples_dip(self, a1_result):
        _, out = a1_result
        rows = (out / "a1_D_profile1.csv").read_text().splitlines()[1:]
        last = rows[-len(rows) // 2]  # mid-run, profile fully applied
        t, ago, ant, mcp, pip, dip = map(float, last.split(","))
        assert abs(mcp) < 1e-12 and abs(pip) < 1e-12
        assert max(float(r.split(",")[5]) for r in rows) > 1.0

    def test_a_type_profiles_1_2_flagged_inapplicable(self, a1_result):
        info, _ = a1_result
        assert info["summaries"]["A_profile1"]["inapplicable"]
        assert info["summaries"]["A_profile2"]["inapplicable"]
        assert not info["summaries"]["A_profile3"]["inapplicable"]
        assert info["summaries"]["A_profile1"]["max_total_rotation_rad"] < 1e-9

    def test_manifest_written(self, a1_result):
        _, out = a1_result
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["experiment"] == "A1"
        assert len(manifest["artifacts"]) == 9


@pytest.fixture(scope="module")
def c_result(tmp_path_factory):
    return run_experiment("C", None, tmp_path_factory.mktemp("c"))


class TestExperimentC:

    def test_cylinder_multi_fingertip(self, c_result):
        assert c_result["contact_counts"]["cylinder"] >= 3

    def test_counts_vary_with_shape(self, c_result):
        assert len(set(c_result["contact_counts"].values())) > 1


class TestReplay:
    def test_fresh_run_replays_identically(self, tmp_path):
        run_experiment("D2", None, tmp_path)
        report = replay(tmp_path / "d2.csv")
        assert report.identical
        assert report.first_divergence_tick is None

    def test_flipped_byte_reports_divergence(self, tmp_path):
        run_experiment("D2", None, tmp_path)
        path = tmp_path / "d2.csv"
        data = bytearray(path.read_bytes())
        lines = path.read_text().splitlines()
        offset = len(lines[0]) + 1 + len(lines[1]) + 1 + 5  # inside line 3 (tick 2)
        data[offset] ^= 0x01
        path.write_bytes(bytes(data))
        report = replay(path)
        assert not report.identical
        assert report.first_divergence_line == 3
        assert report.first_divergence_tick == 2

    def test_version_mismatch_rejected(self, tmp_path):
        run_experiment("workspace", None, tmp_path)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        manifest["version"] = "0.0.0"
        (tmp_path / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(ValueError):
            replay(tmp_path / "workspace_A.csv")

    def test_same_seed_two_runs_identical(self, tmp_path):
        run_experiment("C", None, tmp_path / "one", seed=5)
        run_experiment("C", None, tmp_path / "two", seed=5)
        for name in ("c_cylinder.csv", "c_spool.csv", "manifest.json"):
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()


class TestTelemetryFormat:
    def test_columns_and_rows(self, tmp_path):
        run_experiment("D2", None, tmp_path)
        rows = read_telemetry(tmp_path / "d2.csv")
        assert list(rows[0].keys()) == TELEMETRY_COLUMNS
        assert len(rows) == 900  # 18 s at 50 Hz
        times = [float(r["time"]) for r in rows]
        assert all(b > a for a, b in zip(times, times[1:]))


def _client(port):
    sock = socket.create_connection(("127.0.0.1", port), timeout=5.0)
    sock_file = sock.makefile("rwb")
    return sock, sock_file


def _send(sock_file, msg):
    sock_file.write((json.dumps(msg) + "\n").encode())
    sock_file.flush()


def _recv(sock_file, timeout_msgs=500, want=None):
    for _ in range(timeout_msgs):
        line = sock_file.readline()
        if not line:
            raise AssertionError("connection closed")
        msg = json.loads(line)
        if want is None or want(msg):
            return msg
    raise AssertionError("expected message never arrived")


@pytest.fixture()
def server():
    srv = SessionServer(port=0, realtime=False)
    srv.start()
    yield srv
    srv.stop()


class TestServer:
    def test_hello_returns_config_snapshot(self, server):
        sock, f = _client(server.port)
        try:
            _send(f, {"kind": "hello"})
            msg = _recv(f, want=lambda m: m.get("hello"))
            assert msg["kind"] == "state"
            assert msg["config"]["finger_names"][0] == "thumb"
            assert msg["config"]["open_setpoints"] == [700.0, 820.0]
        finally:
            sock.close()

    def test_set_closure_follows_within_a_tick(self, server):
        sock, f = _client(server.port)
        try:
            _send(f, {"kind": "set_closure", "angle": 90.0, "seq": 7})
            msg = _recv(f, want=lambda m: 7 in m.get("acks", []))
            # map_gesture(90) = 200 + (60/150)*500 = 400, antagonist 460
            assert msg["setpoints"]["agonist"] == pytest.approx(400.0)
            assert msg["setpoints"]["antagonist"] == pytest.approx(460.0)
        finally:
            sock.close()

    def test_malformed_message_gets_error_session_continues(self, server):
        sock, f = _client(server.port)
        try:
            f.write(b"this is not json\n")
            f.flush()
            msg = _recv(f, want=lambda m: m["kind"] == "error")
            assert msg["kind"] == "error"
            _send(f, {"kind": "set_closure", "angle": 120.0, "seq": 1})
            msg = _recv(f, want=lambda m: 1 in m.get("acks", []))
            assert msg["kind"] == "state"
        finally:
            sock.close()

    def test_second_client_is_read_only(self, server):
        sock1, f1 = _client(server.port)
        sock2, f2 = _client(server.port)
        try:
            _send(f1, {"kind": "hello"})
            _recv(f1, want=lambda m: m.get("hello"))
            _send(f2, {"kind": "set_closure", "angle": 45.0})
            msg = _recv(f2, want=lambda m: m["kind"] == "error")
            assert "read-only" in msg["message"]
            _send(f2, {"kind": "hello"})  # hello still allowed
            assert _recv(f2, want=lambda m: m.get("hello"))["kind"] == "state"
        finally:
            sock1.close()
            sock2.close()

    def test_induced_slip_reaches_slip_comp(self, server):
        sock, f = _client(server.port)
        try:
            _send(f, {"kind": "set_closure", "angle": 120.0})
            msg = _recv(f, want=lambda m: m.get("mode") == "CONTACT_HOLD", timeout_msgs=3000)
            _send(
                f,
                {
                    "kind": "inject",
                    "disturbance": "induced_slip",
                    "finger": msg["tactile"]["finger"],
                    "magnitude": -150.0,
                    "duration": 0.3,
                },
            )
            msg = _recv(f, want=lambda m: m.get("mode") == "SLIP_COMP", timeout_msgs=3000)
            assert msg["mode"] == "SLIP_COMP"
        finally:
            sock.close()

    def test_reset_returns_to_rest(self, server):
        sock, f = _client(server.port)
        try:
            _send(f, {"kind": "set_closure", "angle": 60.0})
            _recv(f, want=lambda m: m.get("encoders", {}).get("agonist", 700.0) < 650.0,
                  timeout_msgs=3000)
            _send(f, {"kind": "reset", "seq": 9})
            msg = _recv(f, want=lambda m: 9 in m.get("acks", []))
            assert msg["encoders"]["agonist"] == pytest.approx(700.0, abs=30.0)
        finally:
            sock.close()


class TestConfigDirResolution:
    def test_hand_config_by_file_name(self, tmp_path, monkeypatch):
        import json

        from tendonhand.hand import HandConfig

        cfg = HandConfig(spool_gain=0.25)
        (tmp_path / "hand.json").write_text(json.dumps(cfg.to_dict()))
        monkeypatch.setenv("TENDONHAND_CONFIG_DIR", str(tmp_path))
        scen = Scenario.from_dict(
            {"hand": "hand.json", "gesture_trace": [[0.0, 180.0]], "duration": 1.0}
        )
        assert scen.hand.spool_gain == 0.25


class TestServerLoadScenario:
    def test_load_scenario_swaps_the_session(self, server):
        sock, f = _client(server.port)
        try:
            scen = d1_scenario(seed=9)
            _send(f, {"kind": "load_scenario", "scenario": scen.to_dict(), "seq": 42})
            msg = _recv(f, want=lambda m: 42 in m.get("acks", []), timeout_msgs=2000)
            assert msg["kind"] == "state"
            assert server.scenario.name == "d1_deformation_servo"
            assert server.scenario.seed == 9
        finally:
            sock.close()

    def test_load_scenario_by_name(self, server):
        sock, f = _client(server.port)
        try:
            _send(f, {"kind": "load_scenario", "scenario": "D2", "seq": 43})
            _recv(f, want=lambda m: 43 in m.get("acks", []), timeout_msgs=2000)
            assert server.scenario.name == "d2_reactive_teleoperation"
            _send(f, {"kind": "load_scenario", "scenario": "bogus", "seq": 44})
            msg = _recv(f, want=lambda m: m["kind"] == "error", timeout_msgs=2000)
            assert "named scenario" in msg["message"]
        finally:
            sock.close()
