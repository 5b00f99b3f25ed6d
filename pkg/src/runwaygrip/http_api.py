"""JSON HTTP layer over the assessment service.

Every response carries the bundle's model versions; errors use a uniform
{code, message, detail} body. Stale data answers 503, unknown runways
404, malformed requests 400.
"""
from __future__ import annotations

import csv
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import baselines as bl
from .errors import InputError, RunwaygripError, StaleDataError
from .features import to_epoch_minute
from .io import parse_timestamp
from .service import DataStore, ModelBundle, UnknownRunwayError, assess


def _error(status: int, code: str, message: str, detail: str = "") -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "detail": detail},
    )


def create_app(bundle: ModelBundle, store: DataStore,
               rules: list | None = None, eval_dir=None) -> FastAPI:
    app = FastAPI(title="runway assessment service")
    if rules is None:
        rules = bl.default_scenario_rules()

    @app.exception_handler(RunwaygripError)
    async def handle_domain_error(request: Request, exc: RunwaygripError):
        if isinstance(exc, UnknownRunwayError):
            return _error(404, "unknown_runway", str(exc))
        if isinstance(exc, StaleDataError):
            return _error(503, "stale_data", "assessment unavailable", str(exc))
        return _error(400, "bad_request", str(exc))

    def _parse_threshold(raw):
        if raw is None:
            return None
        try:
            value = float(raw)
        except ValueError as exc:
            raise InputError(f"bad threshold {raw!r}") from exc
        if not 0 < value < 1:
            raise InputError("threshold must be inside (0, 1)")
        return value

    @app.get("/v1/runways")
    def runways():
        return {
            "runways": store.runway_ids(),
            "model_versions": bundle.model_versions,
        }

    @app.get("/v1/runways/{runway_id}/assessment")
    def assessment(runway_id: str, at: str, threshold: str | None = None):
        minute = to_epoch_minute(parse_timestamp(at))
        payload = assess(
            runway_id, minute, bundle, store, rules=rules,
            threshold=_parse_threshold(threshold),
        )
        return payload.to_dict()

    @app.post("/v1/whatif")
    async def whatif(request: Request):
        body = await request.json()
        if not isinstance(body, dict):
            raise InputError("what-if body must be a JSON object")
        for key in ("runway", "at"):
            if key not in body:
                raise InputError(f"what-if body misses {key!r}")
        overrides = body.get("overrides") or {}
        if not isinstance(overrides, dict):
            raise InputError("overrides must be an object")
        minute = to_epoch_minute(parse_timestamp(body["at"]))
        payload = assess(
            body["runway"], minute, bundle, store, rules=rules,
            threshold=_parse_threshold(body.get("threshold")),
            weather_overrides=overrides.get("weather"),
            feature_overrides=overrides.get("features"),
            feature_deltas=overrides.get("feature_deltas"),
        )
        return payload.to_dict()

    @app.get("/v1/model/manifest")
    def manifest():
        return bundle.manifest

    @app.get("/v1/roc")
    def roc():
        if eval_dir is None:
            return _error(404, "no_evaluation", "no evaluation artifacts configured")
        path = Path(eval_dir) / "roc.csv"
        if not path.exists():
            return _error(404, "no_evaluation", f"{path} not found")
        points = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                thr = float(row["threshold"])
                points.append({
                    "fpr": float(row["fpr"]),
                    "tpr": float(row["tpr"]),
                    # the sweep's end thresholds are infinite; JSON gets null
                    "threshold": thr if -1e308 < thr < 1e308 else None,
                })
        return {"points": points, "model_versions": bundle.model_versions}

    return app
