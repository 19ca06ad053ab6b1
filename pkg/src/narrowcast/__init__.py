"""narrowcast: carousel datacasting over a simulated narrowband radio channel."""

from narrowcast.bundle import (
    ApplicationBundle,
    ApplicationMetadata,
    Codec,
    CompressedPayload,
    ContentType,
    FileEntry,
    compress_payload,
    decompress_payload,
    pack_bundle,
    parse_container,
    serialize_container,
)
from narrowcast.carousel import (
    PRESETS,
    CarouselSchedule,
    Frame,
    MultiplexConfig,
    build_schedule,
    cycle_duration,
    frame_stream,
    iter_frames,
)
from narrowcast.channel import ChannelModel, perturb
from narrowcast.codec import (
    ObjectKind,
    ScanStatus,
    Segment,
    SignalingHeader,
    body_checksum,
    decode_next,
    decode_signaling,
    encode_group,
    encode_signaling,
    reassemble,
    segment_payload,
)
from narrowcast.metrics import (
    AcquisitionEstimate,
    ExperimentResult,
    estimate_acquisition_seconds,
    run_experiment,
)
from narrowcast.receiver import (
    AcquisitionOutcome,
    AcquisitionReport,
    DeliveredApplication,
    Receiver,
)

__version__ = "0.1.0"
