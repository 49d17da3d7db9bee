"""A transparent erasure-coding layer between TCP and IP, with the field
arithmetic, MDS codec, TCP model and network simulator it needs."""
from .errors import (
    BadParams,
    ConfigError,
    HandshakeTimeout,
    InsufficientSegments,
    IoError,
    LengthMismatch,
    MalformedBody,
    NcLayerError,
    NoMssOption,
    PastEvent,
    StaleAck,
    TooLarge,
    UnexpectedData,
    ZeroInverse,
)
from .galois import GF256, GaloisField, get_field, gf_add, gf_inv, gf_mul, gf_pow
from .headers import Flag, NcHeader, NcSegment, TcpSegment, position, restore_header, strip_header
from .mds import CodeParams, Codeword, MdsCode, ReceivedSet, SegmentBlock, decode, encode, verify_mds
from .nc import NcReceiver, NcTransmitter
from .scenario import FlowSpec, ScenarioConfig, load_config, parse_config
from .simnet import Metrics, Network, Simulator, run_scenario
from .tcp import TcpSender, TcpSink

__version__ = "0.1.0"
