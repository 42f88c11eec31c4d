"""Python bindings for the lab orchestration engine."""

from ._core import (
    EngineError,
    compare_policies,
    compile_task,
    decode_reads,
    encode_payload,
    registry_services,
    run_scenario,
)

__all__ = [
    "EngineError",
    "compare_policies",
    "compile_task",
    "decode_reads",
    "encode_payload",
    "registry_services",
    "run_scenario",
]
