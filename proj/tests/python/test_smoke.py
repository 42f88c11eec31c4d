import os
import pathlib

import pytest

import autolab

SOURCE = pathlib.Path(os.environ["AUTOLAB_SOURCE_DIR"])
SCENARIOS = SOURCE / "scenarios"


def test_run_scenario_verdicts():
    rec = autolab.run_scenario(str(SCENARIOS / "rpa.cfg"))
    assert rec["run_id"] == "rpa-dynamic-s3"
    assert rec["scenario"] == "rpa"
    assert rec["policy"] == "dynamic"
    assert rec["seed"] == 3
    assert rec["makespan_min"] > 0
    assert rec["step_count"] > 0
    assert rec["trace_csv"].startswith(
        "time_tick,event_kind,request_id,invocation_id,instrument_id,service_id"
    )
    by_id = {r["request"]: r for r in rec["requests"]}
    assert by_id["rpaA"]["verdicts"] == {"patientA": True}
    assert by_id["rpaB"]["verdicts"] == {"patientB": False}
    assert by_id["rpaA"]["halt"] == "single-shot"
    assert by_id["rpaA"]["outcome"]["fluorescence"] == {"patientA": True}


def test_run_scenario_is_deterministic():
    first = autolab.run_scenario(str(SCENARIOS / "rpa.cfg"))
    second = autolab.run_scenario(str(SCENARIOS / "rpa.cfg"))
    assert first["trace_csv"] == second["trace_csv"]


def test_compare_policies_speedup():
    rep = autolab.compare_policies(str(SCENARIOS / "multiuser.cfg"))
    assert rep["speedup"] > 1.0
    assert rep["serial"]["policy"] == "serial"
    assert rep["dynamic"]["policy"] == "dynamic"
    assert rep["serial"]["makespan_min"] > rep["dynamic"]["makespan_min"]


def test_compile_task_reports_programs():
    progs = autolab.compile_task(
        str(SCENARIOS / "standard.reg"), str(SCENARIOS / "templates.kb"), "rpa_test"
    )
    assert len(progs) == 1
    assert progs[0]["procedure"] == "rpa_basal"
    assert progs[0]["invocations"] == 7  # includes the inferred cap
    assert progs[0]["lint_errors"] == 0
    assert progs[0]["dump"].startswith("program rpa_basal invocations 7")


def test_storage_roundtrip_via_bindings():
    payload = bytes(range(48))
    enc = autolab.encode_payload(payload, payload_nt=24)
    assert enc["data_bytes"] == len(payload)
    assert enc["payload_nt"] == 24
    assert enc["index_nt"] == 8
    assert len(enc["strands"]) == 8  # 192 bases over 24-base payloads

    reads = [s for s in enc["strands"] for _ in range(3)]
    dec = autolab.decode_reads(
        reads, strand_count=len(enc["strands"]), data_bytes=len(payload)
    )
    assert dec["data"] == payload
    assert dec["discarded_reads"] == 0
    assert list(dec["cluster_sizes"]) == [3] * 8


def test_registry_services():
    services = autolab.registry_services(str(SCENARIOS / "standard.reg"))
    assert "pipet1" in services
    assert "pipet1.transfer" in services["pipet1"]
    assert "heater1" in services
    assert "tc1" in services


def test_errors_surface_as_engine_error():
    with pytest.raises(autolab.EngineError):
        autolab.run_scenario(str(SCENARIOS / "does_not_exist.cfg"))
    with pytest.raises(autolab.EngineError):
        autolab.encode_payload(b"\x01", payload_nt=7)
