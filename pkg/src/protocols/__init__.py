"""Bundled Modbus-TCP and HTTP specifications with sample messages"""

from src.protocols.bundles import (
    MODBUS_SAMPLES,
    PROTOCOLS,
    SPEC_DIR,
    ProtocolBundle,
    get_protocol,
    http_spec,
    modbus_spec,
)

__all__ = ["MODBUS_SAMPLES", "PROTOCOLS", "SPEC_DIR", "ProtocolBundle", "get_protocol", "http_spec", "modbus_spec"]
