"""Operator command line: run the server and workers, seed patients, inspect
the queue, export the dataset, and drive a full scripted exam for smoke
testing."""

from __future__ import annotations

import logging
import secrets
import tempfile
import threading
import time
from pathlib import Path

import click
import uvicorn

from .api import create_app
from .client import ServiceClient
from .config import ServiceConfig
from .domain import FootSide, PatientRef
from .jobs import JobQueue
from .store import Store
from .synthetic import demo_png
from .worker import InferenceWorker


def _parse_detector_overrides(pairs: tuple[str, ...]) -> dict:
    out = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep:
            raise click.BadParameter(f"expected KEY=VALUE, got {pair!r}")
        out[key] = int(value) if value.isdigit() else float(value)
    return out


@click.group()
@click.option("--config", "config_file", type=click.Path(exists=True, path_type=Path),
              default=None, help="JSON config file.")
@click.option("--data-dir", type=click.Path(path_type=Path), default=None,
              envvar="FOOTSCAN_DATA_DIR", help="Record store directory.")
@click.option("--host", default=None, help="Listen address.")
@click.option("--port", type=int, default=None, help="Listen port.")
@click.option("--token", default=None, envvar="FOOTSCAN_TOKEN",
              help="Static bearer token; empty disables auth.")
@click.option("--blob-strategy", type=click.Choice(["inline", "object_store"]),
              default=None, envvar="FOOTSCAN_BLOB_STRATEGY")
@click.option("--object-store-root", type=click.Path(path_type=Path), default=None)
@click.option("--detector", "detector_overrides", multiple=True,
              help="Detector threshold override, e.g. "
                   "--detector redness_threshold=0.2 (repeatable).")
@click.pass_context
def main(ctx, config_file, data_dir, host, port, token, blob_strategy,
         object_store_root, detector_overrides):
    """Admin tooling for the foot-ulcer triage service."""
    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    ctx.obj = {
        "config_file": config_file,
        "overrides": {
            "data_dir": data_dir,
            "host": host,
            "port": port,
            "token": token,
            "blob_strategy": blob_strategy,
            "object_store_root": object_store_root,
            "detector": _parse_detector_overrides(detector_overrides) or None,
        },
    }


def _load_config(ctx) -> ServiceConfig:
    return ServiceConfig.load(ctx.obj["config_file"], **ctx.obj["overrides"])


def _open_store(config: ServiceConfig) -> Store:
    return Store(config.store_config())


@main.command()
@click.pass_context
def serve(ctx):
    """Run the HTTP API server in the foreground."""
    config = _load_config(ctx)
    app = create_app(config)
    click.echo(f"listening on {config.host}:{config.port}")
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")


@main.command()
@click.option("--workers", "-n", default=1, show_default=True,
              help="Number of parallel worker threads.")
@click.option("--poll-interval", type=float, default=None,
              help="Seconds between empty-queue polls.")
@click.pass_context
def work(ctx, workers, poll_interval):
    """Run inference workers in the foreground until interrupted."""
    config = _load_config(ctx)
    interval = poll_interval if poll_interval is not None else config.poll_interval
    store = _open_store(config)
    queue = JobQueue(store, lease_seconds=config.lease_seconds)
    shutdown = threading.Event()
    threads = []
    for i in range(workers):
        worker = InferenceWorker(f"worker-{i + 1}", store, queue,
                                 max_attempts=config.max_attempts)
        thread = threading.Thread(
            target=worker.run_loop,
            kwargs={"poll_interval": interval, "shutdown": shutdown},
            daemon=True)
        thread.start()
        threads.append(thread)
    click.echo(f"{workers} worker(s) polling every {interval}s; Ctrl-C to stop")
    try:
        while True:
            time.sleep(0.5)
    except KeyboardInterrupt:
        shutdown.set()
        for thread in threads:
            thread.join(timeout=interval + 1)
        click.echo("stopped")


@main.command("seed-patient")
@click.option("--id", "patient_id", required=True, help="Patient identifier.")
@click.pass_context
def seed_patient(ctx, patient_id):
    """Register a patient so exams can be created for them."""
    config = _load_config(ctx)
    store = _open_store(config)
    patient = store.add_patient(patient_id)
    click.echo(f"patient {patient.patient_id} registered")


@main.command()
@click.option("--id", "patient_id", required=True, help="Patient identifier.")
def qr(patient_id):
    """Print the QR payload for a patient (scannable or pasteable)."""
    click.echo(PatientRef.for_patient(patient_id).qr_payload)


@main.command()
@click.pass_context
def queue(ctx):
    """Show job counts by state."""
    config = _load_config(ctx)
    stats = JobQueue(_open_store(config)).stats()
    click.echo(f"pending={stats.pending} in_progress={stats.in_progress} "
               f"complete={stats.complete} failed={stats.failed}")


@main.command()
@click.option("--dest", required=True, type=click.Path(path_type=Path),
              help="Destination directory for photos + manifest.csv.")
@click.pass_context
def export(ctx, dest):
    """Export every stored photograph with a CSV manifest."""
    config = _load_config(ctx)
    count = _open_store(config).export_dataset(dest)
    click.echo(f"exported {count} photograph(s) to {dest}")


@main.command("demo-exam")
@click.option("--patient", default="demo-patient", show_default=True)
@click.option("--image", "image_file", type=click.Path(exists=True, path_type=Path),
              default=None,
              help="PNG uploaded for each foot; defaults to a built-in "
                   "synthetic red-square photo.")
@click.option("--poll-interval", type=float, default=0.05, show_default=True)
@click.pass_context
def demo_exam(ctx, patient, image_file, poll_interval):
    """Run the whole exam flow end to end against an in-process server.

    Exit code 0 means every step (create, details, upload, inference,
    result, confirmation, completion) succeeded.
    """
    if ctx.obj["overrides"]["data_dir"] is None and ctx.obj["config_file"] is None:
        # throwaway store unless the operator pointed at one
        ctx.obj["overrides"]["data_dir"] = Path(tempfile.mkdtemp(prefix="footscan-demo-"))
    config = _load_config(ctx)
    if not config.token:
        config = config.with_overrides(token=secrets.token_hex(8))
    png = Path(image_file).read_bytes() if image_file else demo_png()

    store = _open_store(config)
    queue_ = JobQueue(store, lease_seconds=config.lease_seconds)
    app = create_app(config, store=store, queue=queue_)

    shutdown = threading.Event()
    worker = InferenceWorker("demo-worker", store, queue_,
                             max_attempts=config.max_attempts)
    worker_thread = threading.Thread(
        target=worker.run_loop,
        kwargs={"poll_interval": poll_interval, "shutdown": shutdown},
        daemon=True)

    server, server_thread, port = _start_server(app, config.host)
    worker_thread.start()
    click.echo(f"server listening on {config.host}:{port}")
    try:
        with ServiceClient(f"http://{config.host}:{port}", token=config.token,
                           client_version=config.server_version) as client:
            client.check_server()
            store.add_patient(patient)
            exam_id = client.create_exam(patient)
            click.echo(f"exam {exam_id} opened for patient {patient}")
            for side in (FootSide.LEFT, FootSide.RIGHT):
                job_id = client.submit_foot_exam(
                    exam_id, side, checked=True, visible_ulcer_count=1,
                    png_bytes=png)
                result = client.await_result(job_id, timeout=30.0,
                                             poll_every=poll_interval)
                click.echo(f"{side.value} foot: job {job_id} -> "
                           f"{len(result.detections)} detection(s)")
                for det in result.detections:
                    click.echo(f"  box=({det.box.left}, {det.box.top}, "
                               f"{det.box.width}, {det.box.height}) "
                               f"confidence={det.confidence:.2f}")
                client.confirm(exam_id, side, agrees=True)
            client.complete_exam(exam_id)
            click.echo(f"exam {exam_id} completed")
    except Exception as exc:
        raise click.ClickException(str(exc))
    finally:
        shutdown.set()
        server.should_exit = True
        worker_thread.join(timeout=5)
        server_thread.join(timeout=5)


def _start_server(app, host: str, port: int = 0,
                  startup_timeout: float = 10.0):
    """Run uvicorn in a daemon thread; returns (server, thread, bound port)."""
    server = uvicorn.Server(uvicorn.Config(app, host=host, port=port,
                                           log_level="warning"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + startup_timeout
    while not server.started:
        if time.monotonic() > deadline or not thread.is_alive():
            raise RuntimeError("server failed to start")
        time.sleep(0.01)
    bound_port = server.servers[0].sockets[0].getsockname()[1]
    return server, thread, bound_port


if __name__ == "__main__":
    main()
