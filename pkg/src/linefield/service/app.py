"""The FastAPI application.

Thin glue: each endpoint decodes a request model, calls the matching report
handler, and returns its dict. Library errors map onto HTTP statuses:

  InputError        -> 400  (malformed document)
  PreconditionError -> 422  (valid document outside the operation's domain)
  ObstructionFound  -> 409  (factorization refused; body carries the certificate)

Responses are encoded with the package's own JSON encoder so that numpy
scalars and complex numbers survive.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import Response

from .. import reports as rp
from .. import serialize as sz
from ..errors import InputError, ObstructionFound, PreconditionError
from . import schemas as sc


def _json(payload: dict, status_code: int = 200) -> Response:
    return Response(
        content=sz.dumps(payload),
        status_code=status_code,
        media_type="application/json",
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="linefield",
        description=(
            "Rank-one operator fields over discretized surfaces: analysis, "
            "bundle extraction, factorization obstructions, closure "
            "approximation, and the telescope laboratory."
        ),
    )

    @app.exception_handler(InputError)
    async def _input(request: Request, exc: InputError):
        return _json({"status": "error", "kind": "input", "message": str(exc)}, 400)

    @app.exception_handler(PreconditionError)
    async def _precondition(request: Request, exc: PreconditionError):
        return _json(
            {"status": "error", "kind": "precondition", "message": str(exc)}, 422
        )

    @app.exception_handler(ObstructionFound)
    async def _obstruction(request: Request, exc: ObstructionFound):
        body = {
            "status": "obstructed",
            "kind": "obstruction",
            "message": str(exc),
            "certificate": exc.certificate,
        }
        stage = getattr(exc, "stage", None)
        if stage is not None:
            body["stage"] = stage
        return _json(body, 409)

    @app.get("/health")
    async def health():
        return _json({"status": "ok", "schema": sz.SCHEMA})

    @app.post("/generate")
    async def generate(req: sc.GenerateRequest):
        return _json({"schema": sz.SCHEMA, "status": "ok", "field": rp.generate(req.name, req.seed)})

    @app.post("/analyze")
    async def analyze(req: sc.AnalyzeRequest):
        return _json(
            rp.analyze(
                req.field,
                rank_tol=req.rank_tol,
                continuity_budget=req.continuity_budget,
                seed=req.seed,
                edge_variation=req.edge_variation,
            )
        )

    @app.post("/extract")
    async def extract(req: sc.ExtractRequest):
        return _json(rp.extract(req.field, rank_tol=req.rank_tol))

    @app.post("/chern")
    async def chern(req: sc.BundleRequest):
        return _json(
            rp.chern(req.field, rank_tol=req.rank_tol, rho=req.rho, margin=req.margin)
        )

    @app.post("/trivialize")
    async def trivialize(req: sc.BundleRequest):
        return _json(
            rp.trivialize(
                req.field, rank_tol=req.rank_tol, rho=req.rho, margin=req.margin
            )
        )

    @app.post("/factor")
    async def factor(req: sc.BundleRequest):
        return _json(
            rp.factor(req.field, rank_tol=req.rank_tol, rho=req.rho, margin=req.margin)
        )

    @app.post("/synthesize")
    async def synthesize(req: sc.SynthesizeRequest):
        return _json(rp.synthesize(req.section, zero_tol=req.zero_tol))

    @app.post("/approximate")
    async def approximate(req: sc.ApproximateRequest):
        return _json(
            rp.approximate(
                req.field,
                n_stages=req.n_stages,
                rank_tol=req.rank_tol,
                seed=req.seed,
                include_factors=req.include_factors,
            )
        )

    @app.post("/verdict")
    async def verdict(req: sc.VerdictRequest):
        return _json(rp.verdict(req.field, rank_tol=req.rank_tol, seed=req.seed))

    @app.post("/telescope/build")
    async def telescope_build(req: sc.TelescopeBuildRequest):
        return _json(
            rp.telescope_build(
                req.depth, tail=req.tail, far_size=req.far_size, kind=req.kind
            )
        )

    @app.post("/telescope/decide")
    async def telescope_decide(req: sc.TelescopeDecideRequest):
        return _json(rp.telescope_decide(req.gluing, bound=req.bound))

    @app.post("/telescope/demo")
    async def telescope_demo(req: sc.TelescopeDemoRequest):
        return _json(rp.telescope_demo(depth=req.depth, bound=req.bound, seed=req.seed))

    @app.post("/haagerup")
    async def haagerup(req: sc.HaagerupRequest):
        return _json(
            rp.haagerup(req.rep, rank_tol=req.rank_tol, iters=req.iters, seed=req.seed)
        )

    @app.post("/recover")
    async def recover(req: sc.RecoverRequest):
        return _json(
            rp.recover(req.a, req.b, req.c, req.d, eps=req.eps, norm_tol=req.norm_tol)
        )

    @app.post("/cohomology")
    async def cohomology(req: sc.CohomologyRequest):
        return _json(rp.cohomology(req.complex))

    @app.post("/experiment/length-limits")
    async def experiment(req: sc.ExperimentRequest):
        return _json(
            rp.length_limit_experiment(
                dim=req.dim,
                target_length=req.target_length,
                trials=req.trials,
                steps=req.steps,
                seed=req.seed,
            )
        )

    return app


app = create_app()
