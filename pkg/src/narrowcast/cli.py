"""Command-line surface: pack | broadcast | receive | simulate | estimate.

Offline files decouple the stages: `pack` writes a GPKG blob (signaling +
compressed body), `broadcast` turns it into a GFRM frame-stream file, and
`receive` plays that stream through the channel model into a receiver.
`simulate` runs the whole loop in memory.

Exit codes: 0 success, 2 configuration/usage error, 3 acquisition timed
out, 4 integrity failure after completion, 1 anything else.
"""

from __future__ import annotations

import shlex
import subprocess
from dataclasses import replace
from itertools import islice
from pathlib import Path

import click
from click.core import ParameterSource

from narrowcast.bundle import (
    ApplicationMetadata,
    Codec,
    ContentType,
    FileEntry,
    compress_payload,
    pack_bundle,
    serialize_container,
)
from narrowcast.carousel import (
    PRESETS,
    MultiplexConfig,
    build_schedule,
    cycle_duration,
    frames_for_cycles,
    iter_frame_file,
    iter_frames,
    read_frame_file_header,
    write_frame_file,
)
from narrowcast.channel import ChannelModel, perturb_iter
from narrowcast.codec import decode_package, encode_package
from narrowcast.errors import (
    BodyCrcMismatchError,
    ConfigError,
    NarrowcastError,
)
from narrowcast.metrics import (
    DEFAULT_TIMEOUT_CYCLES,
    build_signaling,
    estimate_acquisition_seconds,
    experiment_document,
    render_json,
    render_text,
    round_time,
    run_experiment,
)
from narrowcast.receiver import AcquisitionOutcome, Receiver

EXIT_GENERIC = 1
EXIT_CONFIG = 2
EXIT_TIMEOUT = 3
EXIT_INTEGRITY = 4

_CODECS = {"none": Codec.NONE, "deflate": Codec.DEFLATE, "lzma": Codec.LZMA}
_CONTENT_TYPES = {
    "app": ContentType.INTERACTIVE_APPLICATION,
    "files": ContentType.RAW_FILE_SET,
}


def _fail(message: str, code: int) -> "click.exceptions.Exit":
    click.echo(f"error: {message}", err=True)
    return click.exceptions.Exit(code)


def _parse_config_file(path: str) -> dict[str, str]:
    """`key = value` lines; '#' starts a comment; keys are long flag names."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def _apply_config(ctx: click.Context) -> None:
    """Merge config-file values under explicit flags; reject unknown keys."""
    path = ctx.params.get("config")
    if not path:
        return
    by_flag: dict[str, click.Parameter] = {}
    for param in ctx.command.params:
        for opt in param.opts:
            if opt.startswith("--"):
                by_flag[opt[2:]] = param
    overrides = ctx.meta.setdefault("config_overrides", set())
    for key, raw in _parse_config_file(path).items():
        param = by_flag.get(key)
        if param is None or key == "config":
            raise ConfigError(f"unknown config key: {key!r}")
        if ctx.get_parameter_source(param.name) is ParameterSource.DEFAULT:
            ctx.params[param.name] = param.type.convert(raw, param, ctx)
            overrides.add(param.name)


def _given(ctx: click.Context, name: str) -> bool:
    if name in ctx.meta.get("config_overrides", set()):
        return True
    return ctx.get_parameter_source(name) is not ParameterSource.DEFAULT


def _resolve_mux(ctx: click.Context) -> MultiplexConfig:
    p = ctx.params
    preset = p.get("preset")
    if preset:
        base = PRESETS[preset]
        return MultiplexConfig(
            data_bitrate=p["bitrate"] if _given(ctx, "bitrate") else base.data_bitrate,
            audio_bitrate=(
                p["audio_bitrate"] if _given(ctx, "audio_bitrate") else base.audio_bitrate
            ),
            frame_duration=(
                p["frame_duration"] if _given(ctx, "frame_duration") else base.frame_duration
            ),
            preset_name=preset,
        )
    return MultiplexConfig(
        data_bitrate=p["bitrate"],
        audio_bitrate=p["audio_bitrate"],
        frame_duration=p["frame_duration"],
    )


def _collect_files(input_dir: Path) -> list[FileEntry]:
    paths = sorted(p for p in input_dir.rglob("*") if p.is_file())
    if not paths:
        raise NarrowcastError(f"no files under {input_dir}")
    return [
        FileEntry(name=p.relative_to(input_dir).as_posix(), data=p.read_bytes())
        for p in paths
    ]


def _build_bundle(ctx: click.Context, input_dir: Path):
    p = ctx.params
    content_type = _CONTENT_TYPES[p["content_type"]]
    entry_point = p["entry_point"] or ""
    if content_type == ContentType.INTERACTIVE_APPLICATION and not entry_point:
        raise ConfigError("--entry-point is required for --content-type app")
    files = _collect_files(input_dir)
    metadata = ApplicationMetadata(
        app_id=p["app_id"],
        entry_point=entry_point,
        autostart=p["autostart"],
        content_type=content_type,
    )
    return pack_bundle(files, metadata)


def _run_guarded(body):
    try:
        body()
    except ConfigError as exc:
        raise _fail(str(exc), EXIT_CONFIG)
    except NarrowcastError as exc:
        raise _fail(str(exc), EXIT_GENERIC)


@click.group()
def main() -> None:
    """Datacast an application bundle over a simulated narrowband radio channel."""


@main.command()
@click.argument("input_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--entry-point", default="", help="File the receiver should open first.")
@click.option("--app-id", type=int, default=1, show_default=True)
@click.option("--autostart/--no-autostart", default=True, show_default=True)
@click.option("--codec", type=click.Choice(sorted(_CODECS)), default="deflate",
              show_default=True)
@click.option("--content-type", type=click.Choice(sorted(_CONTENT_TYPES)), default="app",
              show_default=True)
@click.option("--bitrate", type=int, default=5000, show_default=True,
              help="Data bitrate used for the printed transfer estimate.")
@click.option("--assume-compressed-size", type=int, default=None,
              help="Base the printed estimate on this body size instead of the real one.")
@click.option("-o", "--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
              help="key = value file merged under explicit flags.")
@click.pass_context
def pack(ctx: click.Context, **_kw) -> None:
    """Pack a directory into a signaling+body package (GPKG)."""

    def body() -> None:
        _apply_config(ctx)
        p = ctx.params
        bundle = _build_bundle(ctx, p["input_dir"])
        container = serialize_container(bundle)
        payload = compress_payload(container, _CODECS[p["codec"]])
        header = build_signaling(
            bundle, payload.data, _CODECS[p["codec"]], payload.uncompressed_size
        )
        p["out"].write_bytes(encode_package(header, payload.data))
        estimate_bytes = (
            p["assume_compressed_size"]
            if p["assume_compressed_size"] is not None
            else len(payload.data)
        )
        estimate = estimate_acquisition_seconds(estimate_bytes, p["bitrate"])
        click.echo(f"files {len(bundle.files)}")
        click.echo(f"uncompressed {bundle.total_uncompressed_size}")
        click.echo(f"container {len(container)}")
        click.echo(f"compressed {len(payload.data)} codec {p['codec']}")
        click.echo(f"estimate {estimate.seconds:.4f} s at {p['bitrate']} bps")
        click.echo(f"wrote {p['out']}")

    _run_guarded(body)


@main.command()
@click.argument("packed", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None,
              help="Named bitrate allocation; explicit flags override its fields.")
@click.option("--bitrate", type=int, default=5000, show_default=True)
@click.option("--audio-bitrate", type=int, default=16000, show_default=True)
@click.option("--frame-duration", type=float, default=0.4, show_default=True)
@click.option("--segment-size", type=int, default=1024, show_default=True)
@click.option("--frames", type=int, default=None, help="Exact frame count to emit.")
@click.option("--cycles", type=float, default=2.0, show_default=True,
              help="Emit enough frames to cover this many carousel cycles.")
@click.option("-o", "--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_context
def broadcast(ctx: click.Context, **_kw) -> None:
    """Schedule a packed application and emit a frame-stream file (GFRM)."""

    def body() -> None:
        _apply_config(ctx)
        p = ctx.params
        config = _resolve_mux(ctx)
        header, body_bytes = decode_package(p["packed"].read_bytes())
        schedule = build_schedule(header, body_bytes, p["segment_size"])
        count = (
            p["frames"]
            if p["frames"] is not None
            else frames_for_cycles(schedule, config, p["cycles"])
        )
        write_frame_file(
            p["out"], islice(iter_frames(schedule, config), count), config.frame_capacity
        )
        click.echo(f"capacity {config.frame_capacity} bytes/frame")
        click.echo(
            f"cycle {schedule.cycle_bytes} bytes "
            f"{cycle_duration(schedule, config):.4f} s"
        )
        click.echo(f"frames {count}")
        click.echo(f"wrote {p['out']}")

    _run_guarded(body)


def _receive_document(report, model: ChannelModel, capacity: int,
                      frame_duration: float, delivered, delivery_error) -> dict:
    doc = {
        "schema": "narrowcast/report-v1",
        "outcome": report.outcome.value,
        "join_time_s": round_time(report.join_time),
        "header_complete_time_s": round_time(report.header_complete_time),
        "completion_time_s": round_time(report.completion_time),
        "elapsed_s": round_time(report.elapsed),
        "frames_seen": report.frames_seen,
        "groups_ok": report.groups_ok,
        "groups_corrupt": report.groups_corrupt,
        "frame_capacity": capacity,
        "frame_duration_s": frame_duration,
        "loss": model.frame_loss_prob,
        "ber": model.bit_error_rate,
        "burst": model.burst_len,
        "seed": model.seed,
        "delivered": delivered is not None,
        "delivery_error": delivery_error,
    }
    if delivered is not None:
        doc["app_id"] = delivered.launch.app_id
        doc["entry_point"] = delivered.launch.entry_point
        doc["autostart"] = delivered.launch.autostart
    return doc


@main.command()
@click.argument("stream", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--loss", type=float, default=0.0, show_default=True,
              help="Whole-frame loss probability.")
@click.option("--ber", type=float, default=0.0, show_default=True,
              help="Per-bit error (burst-start) probability.")
@click.option("--burst", type=int, default=1, show_default=True,
              help="Bits flipped per error event.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--frame-duration", type=float, default=0.4, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Write delivered files here.")
@click.option("--exec", "exec_cmd", default=None,
              help="Command run on delivery with the entry-point path appended.")
@click.option("--report", "report_format", type=click.Choice(["text", "json"]),
              default="text", show_default=True)
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_context
def receive(ctx: click.Context, **_kw) -> None:
    """Play a frame-stream file through the channel into a receiver."""

    def body() -> None:
        _apply_config(ctx)
        p = ctx.params
        if p["exec_cmd"] and not p["out_dir"]:
            raise ConfigError("--exec requires --out-dir")
        model = ChannelModel(
            frame_loss_prob=p["loss"],
            bit_error_rate=p["ber"],
            burst_len=p["burst"],
            seed=p["seed"],
        )
        with open(p["stream"], "rb") as fp:
            capacity, _ = read_frame_file_header(fp)
        frames = iter_frame_file(p["stream"], p["frame_duration"])
        receiver = Receiver(frame_duration=p["frame_duration"], join_time=0.0)
        delivered = None
        delivery_error = None
        for frame in perturb_iter(frames, model):
            receiver.ingest_frame(frame)
            if receiver.is_complete:
                try:
                    delivered = receiver.deliver(p["out_dir"])
                    break
                except BodyCrcMismatchError:
                    continue
                except NarrowcastError as exc:
                    delivery_error = f"{type(exc).__name__}: {exc}"
                    break
        report = receiver.report()
        doc = _receive_document(
            report, model, capacity, p["frame_duration"], delivered, delivery_error
        )
        if p["report_format"] == "json":
            click.echo(render_json(doc))
        else:
            click.echo(render_text(doc))
        if delivered is not None:
            click.echo(delivered.launch.line())
            if p["exec_cmd"]:
                entry_path = p["out_dir"] / delivered.launch.entry_point
                status = subprocess.run(
                    shlex.split(p["exec_cmd"]) + [str(entry_path)], check=False
                )
                if status.returncode != 0:
                    raise _fail(
                        f"launch command exited {status.returncode}", EXIT_GENERIC
                    )
            return
        if report.outcome is AcquisitionOutcome.TIMED_OUT and delivery_error is None:
            raise _fail("acquisition timed out", EXIT_TIMEOUT)
        raise _fail(f"integrity failure: {delivery_error}", EXIT_INTEGRITY)

    _run_guarded(body)


def _parse_sweep(expression: str) -> list[int]:
    key, _, values = expression.partition("=")
    if key.strip() != "bitrate" or not values:
        raise ConfigError("--sweep expects bitrate=<v1,v2,...>")
    try:
        return [int(v) for v in values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad sweep value: {exc}") from exc


@main.command()
@click.argument("input_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--entry-point", default="")
@click.option("--app-id", type=int, default=1, show_default=True)
@click.option("--autostart/--no-autostart", default=True, show_default=True)
@click.option("--codec", type=click.Choice(sorted(_CODECS)), default="deflate",
              show_default=True)
@click.option("--content-type", type=click.Choice(sorted(_CONTENT_TYPES)), default="app",
              show_default=True)
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None)
@click.option("--bitrate", type=int, default=5000, show_default=True)
@click.option("--audio-bitrate", type=int, default=16000, show_default=True)
@click.option("--frame-duration", type=float, default=0.4, show_default=True)
@click.option("--segment-size", type=int, default=1024, show_default=True)
@click.option("--loss", type=float, default=0.0, show_default=True)
@click.option("--ber", type=float, default=0.0, show_default=True)
@click.option("--burst", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--join-offset", type=int, default=0, show_default=True,
              help="Frame index at which the receiver tunes in.")
@click.option("--launch-latency", type=float, default=0.0, show_default=True,
              help="Viewer start-up seconds added to the reported elapsed time.")
@click.option("--timeout-cycles", type=float, default=DEFAULT_TIMEOUT_CYCLES,
              show_default=True)
@click.option("--force-body-size", type=int, default=None,
              help="Truncate/pad the on-air body to this size (timing studies).")
@click.option("--sweep", default=None, help="bitrate=<v1,v2,...> one run per value.")
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--report", "report_format", type=click.Choice(["text", "json"]),
              default="text", show_default=True)
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_context
def simulate(ctx: click.Context, **_kw) -> None:
    """Pack, broadcast, perturb, and receive in one in-memory run."""

    def body() -> None:
        _apply_config(ctx)
        p = ctx.params
        bundle = _build_bundle(ctx, p["input_dir"])
        base_config = _resolve_mux(ctx)
        model = ChannelModel(
            frame_loss_prob=p["loss"],
            bit_error_rate=p["ber"],
            burst_len=p["burst"],
            seed=p["seed"],
        )
        bitrates = _parse_sweep(p["sweep"]) if p["sweep"] else [base_config.data_bitrate]
        docs = []
        worst_exit = 0
        for bitrate in bitrates:
            config = replace(base_config, data_bitrate=bitrate)
            result = run_experiment(
                bundle,
                config,
                model,
                join_offset=p["join_offset"],
                launch_latency_s=p["launch_latency"],
                codec=_CODECS[p["codec"]],
                segment_size=p["segment_size"],
                timeout_cycles=p["timeout_cycles"],
                force_body_size=p["force_body_size"],
                sink=p["out_dir"],
            )
            doc = experiment_document(
                result, config, model, p["join_offset"], p["launch_latency"]
            )
            docs.append((result, doc))
            if result.report.outcome is AcquisitionOutcome.TIMED_OUT:
                worst_exit = max(worst_exit, EXIT_TIMEOUT)
            elif result.delivered is None and p["force_body_size"] is None:
                worst_exit = max(worst_exit, EXIT_INTEGRITY)
        if p["report_format"] == "json":
            payload = [doc for _, doc in docs]
            click.echo(render_json(payload if p["sweep"] else payload[0]))
        elif p["sweep"]:
            for result, doc in docs:
                ratio = (
                    f"{doc['elapsed_s'] / doc['estimate_seconds']:.4f}"
                    if doc["elapsed_s"] is not None
                    else "-"
                )
                click.echo(
                    f"bitrate={doc['data_bitrate']} outcome={doc['outcome']} "
                    f"elapsed_s={doc['elapsed_s']} "
                    f"estimate_s={doc['estimate_seconds']} ratio={ratio}"
                )
        else:
            click.echo(render_text(docs[0][1]))
            if docs[0][0].delivered is not None:
                click.echo(docs[0][0].delivered.launch.line())
        if worst_exit:
            raise click.exceptions.Exit(worst_exit)

    _run_guarded(body)


@main.command()
@click.argument("payload_bytes", type=int)
@click.argument("bitrate", type=int)
def estimate(payload_bytes: int, bitrate: int) -> None:
    """Idealized transfer time for a payload at a data bitrate."""
    try:
        result = estimate_acquisition_seconds(payload_bytes, bitrate)
    except NarrowcastError as exc:
        raise _fail(str(exc), EXIT_CONFIG)
    click.echo(f"bits {result.payload_bits}")
    click.echo(f"seconds {result.seconds:.4f}")


if __name__ == "__main__":
    main()
