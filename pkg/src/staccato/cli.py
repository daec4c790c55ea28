"""Command-line client for the laughter detection service.

Subcommands post their work to the HTTP service: by default an
in-process instance of the app, or a remote one named via --server.
File reading and writing stays on the client side, so missing or
unreadable files fail before any request is sent.

Exit codes: 0 success, 1 usage or configuration error, 2 I/O or file
content error, 3 analysis precondition failure.
"""

from __future__ import annotations

import argparse
import base64
import dataclasses
import json
import sys
from pathlib import Path
from typing import Any, Optional

import httpx

from staccato.config import build_config, load_config_file, resolve_config_path
from staccato.errors import AnalysisError, AudioReadError, ConfigError
from staccato.evalkit import parse_annotations

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_ANALYSIS = 3

_KIND_EXIT = {"usage": EXIT_USAGE, "io": EXIT_IO, "analysis": EXIT_ANALYSIS}

_SCENE_KEYS = {
    "total_s",
    "sample_rate_hz",
    "background",
    "background_variance",
    "background_seed",
    "bouts",
}


class _UsageError(Exception):
    pass


class _InputFileError(Exception):
    """A named input file exists but its content is unusable."""


class _RemoteError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind if kind in _KIND_EXIT else "usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 on usage errors, not argparse's 2
        raise _UsageError(f"{self.prog}: {message}")


class ServiceClient:
    """Minimal JSON client; in-process app unless a server URL is given."""

    def __init__(self, server: Optional[str] = None):
        if server:
            self._client = httpx.Client(
                base_url=server.rstrip("/"),
                timeout=httpx.Timeout(600.0, connect=10.0),
            )
        else:
            import warnings

            with warnings.catch_warnings():
                # starlette warns about its own future httpx plans on import
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from staccato.service.app import create_app

            self._client = TestClient(create_app())

    def close(self) -> None:
        self._client.close()

    def post(self, path: str, payload: dict) -> dict:
        try:
            resp = self._client.post(path, json=payload)
        except httpx.HTTPError as exc:
            raise _RemoteError("io", f"service request failed: {exc}") from None
        if resp.status_code >= 400:
            raise _RemoteError(*_error_detail(resp))
        return resp.json()


def _error_detail(resp: httpx.Response) -> tuple[str, str]:
    try:
        detail = resp.json().get("detail")
    except ValueError:
        detail = None
    if isinstance(detail, dict) and "message" in detail:
        return detail.get("kind", "usage"), detail["message"]
    if isinstance(detail, list):  # request model validation
        parts = "; ".join(
            f"{'.'.join(str(loc) for loc in item.get('loc', []))}: {item.get('msg', '')}"
            for item in detail
        )
        return "usage", f"invalid request: {parts}"
    kind = "usage" if resp.status_code < 500 else "analysis"
    return kind, f"service error (HTTP {resp.status_code})"


def _read_wav_b64(path: str) -> str:
    with open(path, "rb") as fh:
        return base64.b64encode(fh.read()).decode("ascii")


def _pipeline_payload(args: argparse.Namespace) -> dict[str, Any]:
    """Merge config file and flags, validate locally, and serialize."""
    cfg_path = resolve_config_path(getattr(args, "config", None))
    file_values = load_config_file(cfg_path) if cfg_path else {}
    overrides: dict[str, Any] = {}
    threads = getattr(args, "threads", None)
    if threads is not None:
        overrides["threads"] = threads
    mode = getattr(args, "threshold_mode", None)
    if mode is not None:
        if mode == "otsu":
            overrides["threshold_mode"] = "otsu"
        elif mode.startswith("fixed:"):
            try:
                overrides["fixed_threshold_db"] = float(mode.split(":", 1)[1])
            except ValueError:
                raise ConfigError(f"--threshold-mode fixed needs a dB value, got {mode!r}")
            overrides["threshold_mode"] = "fixed"
        else:
            raise ConfigError(
                f"--threshold-mode must be 'otsu' or 'fixed:<dB>', got {mode!r}"
            )
    cfg, threads = build_config(file_values, overrides)
    payload = dataclasses.asdict(cfg)
    payload["threads"] = threads
    return payload


def _percent(x: float) -> str:
    return f"{100.0 * x:.1f}"


def _parse_hypothesis(text: str) -> list[dict[str, float]]:
    """Interval list from detect output: JSON array or start/end lines."""
    text = text.strip()
    if not text:
        return []
    if text.startswith("["):
        try:
            items = json.loads(text)
        except json.JSONDecodeError as exc:
            raise AnalysisError(f"hypothesis JSON: {exc}") from None
        out = []
        for item in items:
            if isinstance(item, dict) and {"start_s", "end_s"} <= set(item):
                out.append({"start_s": float(item["start_s"]), "end_s": float(item["end_s"])})
            elif isinstance(item, (list, tuple)) and len(item) == 2:
                out.append({"start_s": float(item[0]), "end_s": float(item[1])})
            else:
                raise AnalysisError(f"hypothesis entry {item!r} is not an interval")
        return out
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise AnalysisError(f"hypothesis line {lineno}: expected two fields")
        try:
            out.append({"start_s": float(parts[0]), "end_s": float(parts[1])})
        except ValueError as exc:
            raise AnalysisError(f"hypothesis line {lineno}: {exc}") from None
    return out


def _write_rhythm_csv(path: str, dumps: list[dict]) -> None:
    with open(path, "w") as fh:
        fh.write(
            "frame_index,row,time_s,band1,band2,band3,band4,band5,band6\n"
        )
        for dump in dumps:
            start = dump["frame_start_s"]
            hop = dump["subwindow_hop_s"]
            for r, row in enumerate(dump["rows"]):
                cells = ",".join(f"{v:.9g}" for v in row)
                fh.write(f"{dump['frame_index']},{r},{start + r * hop:.6f},{cells}\n")


def _write_roc_csv_rows(path: str, points: list[dict]) -> None:
    # same layout the tuning harness writes locally: threshold,tpr,fpr
    with open(path, "w") as fh:
        fh.write("threshold,tpr,fpr\n")
        for pt in points:
            thr = float("inf") if pt["threshold"] is None else pt["threshold"]
            fh.write(f"{thr},{pt['tpr']},{pt['fpr']}\n")


def _cmd_detect(args: argparse.Namespace) -> int:
    wav_b64 = _read_wav_b64(args.wav)
    config_payload = _pipeline_payload(args)
    client = ServiceClient(args.server)
    try:
        result = client.post(
            "/detect",
            {
                "wav_base64": wav_b64,
                "config": config_payload,
                "include_rhythm": bool(args.debug_rhythm),
            },
        )
    finally:
        client.close()
    if args.json:
        print(json.dumps(result["intervals"]))
    else:
        for iv in result["intervals"]:
            print(f"{iv['start_s']:.3f}\t{iv['end_s']:.3f}")
    if args.debug_rhythm:
        _write_rhythm_csv(args.debug_rhythm, result["rhythm"])
    return EXIT_OK


def _cmd_tune(args: argparse.Namespace) -> int:
    wav_b64 = _read_wav_b64(args.wav)
    truth_csv = Path(args.truth).read_text()
    config_payload = _pipeline_payload(args)
    client = ServiceClient(args.server)
    try:
        result = client.post(
            "/tune",
            {"wav_base64": wav_b64, "truth_csv": truth_csv, "config": config_payload},
        )
    finally:
        client.close()
    if args.json:
        print(json.dumps(result))
    else:
        print(
            f"optimal threshold: {result['optimal_threshold_db']:.4f} dB "
            f"(F1 {_percent(result['optimal_f1'])})"
        )
        print(
            f"automatic threshold: {result['otsu_threshold_db']:.4f} dB "
            f"(F1 {_percent(result['otsu_f1'])})"
        )
    otsu_path = f"{args.out_prefix}roc_otsu.csv"
    opt_path = f"{args.out_prefix}roc_opt.csv"
    _write_roc_csv_rows(otsu_path, result["roc_otsu"])
    _write_roc_csv_rows(opt_path, result["roc_opt"])
    if not args.json:
        print(f"wrote {otsu_path} and {opt_path}")
    return EXIT_OK


def _cmd_score(args: argparse.Namespace) -> int:
    hyp_text = Path(args.hyp).read_text()
    ref_text = Path(args.ref).read_text()
    try:
        detected = _parse_hypothesis(hyp_text)
        reference = parse_annotations(ref_text)
    except AnalysisError as exc:
        raise _InputFileError(str(exc)) from None
    client = ServiceClient(args.server)
    try:
        result = client.post(
            "/score",
            {
                "detected": detected,
                "reference": [
                    {"start_s": iv.start_s, "end_s": iv.end_s}
                    for iv in reference.intervals
                ],
                "duration_s": args.dur,
                "eval_hop_s": args.hop,
            },
        )
    finally:
        client.close()
    if args.json:
        print(json.dumps(result))
    else:
        print(
            f"tp {result['true_positive']}  fp {result['false_positive']}"
            f"  fn {result['false_negative']}"
        )
        print(f"precision {_percent(result['precision'])}")
        print(f"recall {_percent(result['recall'])}")
        print(f"F1 {_percent(result['f1'])}")
    return EXIT_OK


def _load_scene(path: str) -> dict[str, Any]:
    try:
        import tomllib
    except ModuleNotFoundError:  # pragma: no cover
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            scene = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise _InputFileError(f"scene file {path}: {exc}") from None
    unknown = sorted(set(scene) - _SCENE_KEYS)
    if unknown:
        raise ConfigError(f"scene file {path}: unknown keys {', '.join(unknown)}")
    if "total_s" not in scene:
        raise ConfigError(f"scene file {path}: total_s is required")
    return scene


def _cmd_synth(args: argparse.Namespace) -> int:
    if args.corpus is not None:
        # bulk generation for the test suite runs locally, not via the service
        from staccato.synthlab import default_corpus, write_truth_csv, write_wav

        if args.corpus < 1:
            raise ConfigError("--corpus needs a positive clip count")
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        n_laugh = (3 * args.corpus) // 5
        items = default_corpus(
            n_laugh=n_laugh,
            n_controls=args.corpus - n_laugh,
            base_seed=args.seed,
        )
        for i, item in enumerate(items):
            stem = out_dir / f"clip_{i:03d}_{item.kind}"
            write_wav(stem.with_suffix(".wav"), item.clip.signal)
            write_truth_csv(stem.with_suffix(".csv"), item.clip.truth)
        print(f"wrote {len(items)} clips to {out_dir}")
        return EXIT_OK

    if not args.spec or not args.out:
        raise _UsageError("staccato synth: --spec and --out are required without --corpus")
    scene = _load_scene(args.spec)
    client = ServiceClient(args.server)
    try:
        result = client.post("/synth", scene)
    finally:
        client.close()
    out_path = Path(args.out)
    out_path.write_bytes(base64.b64decode(result["wav_base64"]))
    truth_path = out_path.with_suffix(".csv")
    with open(truth_path, "w") as fh:
        fh.write("start_s,end_s\n")
        for iv in result["truth"]:
            fh.write(f"{iv['start_s']},{iv['end_s']}\n")
    print(f"wrote {out_path} and {truth_path}")
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from staccato.service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser, with_config: bool = True) -> None:
    p.add_argument("--server", default=None, help="remote service URL (default: in-process)")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    if with_config:
        p.add_argument("--config", default=None, help="TOML config file (or STACCATO_CONFIG)")
        p.add_argument("--threads", type=int, default=None, help="worker threads per request")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="staccato", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect laughter intervals in a WAV file")
    p.add_argument("wav", help="input WAV path")
    p.add_argument(
        "--threshold-mode",
        default=None,
        help="power gate: 'otsu' (default) or 'fixed:<dB>'",
    )
    p.add_argument(
        "--debug-rhythm",
        default=None,
        metavar="CSV",
        help="dump per-frame rhythm matrices to this CSV",
    )
    _add_common(p)
    p.set_defaults(handler=_cmd_detect)

    p = sub.add_parser("tune", help="sweep the power threshold on labeled audio")
    p.add_argument("wav", help="input WAV path")
    p.add_argument("truth", help="reference CSV (start_s,end_s)")
    p.add_argument("--out-prefix", default="", help="prefix for roc_otsu.csv / roc_opt.csv")
    _add_common(p)
    p.set_defaults(handler=_cmd_tune)

    p = sub.add_parser("score", help="score hypothesis intervals against a reference")
    p.add_argument("--hyp", required=True, help="hypothesis intervals (JSON or TSV)")
    p.add_argument("--ref", required=True, help="reference CSV (start_s,end_s)")
    p.add_argument("--dur", required=True, type=float, help="recording duration in seconds")
    p.add_argument("--hop", type=float, default=0.01, help="evaluation tick in seconds")
    _add_common(p, with_config=False)
    p.set_defaults(handler=_cmd_score)

    p = sub.add_parser("synth", help="synthesize a test clip (plus truth CSV)")
    p.add_argument("--spec", default=None, help="scene TOML file")
    p.add_argument("--out", default=None, help="output WAV path")
    p.add_argument("--corpus", type=int, default=None, metavar="N",
                   help="emit N seeded corpus clips instead of one scene")
    p.add_argument("--out-dir", default=".", help="directory for --corpus output")
    p.add_argument("--seed", type=int, default=101, help="base seed for --corpus")
    _add_common(p, with_config=False)
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=_cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (_InputFileError, AudioReadError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except _RemoteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _KIND_EXIT[exc.kind]
    except AnalysisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
