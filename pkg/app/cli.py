"""
Línea de comandos de SketchKRR.

Subcomandos: train, predict, eval, bench, statdim y serve.

Códigos de salida:
- 0: éxito.
- 1: error de uso (argumentos o configuración inválidos).
- 2: error de datos (fichero mal formado, dimensiones, modelo corrupto...).
- 3: PCG no convergió (solo train; el modelo se escribe igualmente).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from typing import List, Optional, Sequence

from pydantic import ValidationError

from app import __app_name__, __version__
from app.models.kernels import KernelFamily, KernelSpec
from app.models.reports import CommandReport
from app.models.solver import ChainSpec, FeatureMapKind, SolverConfig, Task
from app.services import kernels
from app.services.bench_service import evaluate_model, format_bench_table, get_bench_service
from app.services.data_service import DataFormat, load_dataset, train_test_split
from app.services.errors import (
    IncompatibleSketchError,
    InvalidDeltaError,
    KrrError,
    NonPositiveLambdaError,
)
from app.services.model_store_service import load_model, save_model
from app.services.solver_service import get_solver_service

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NOT_CONVERGED = 3

_USAGE_ERRORS = (ValidationError, IncompatibleSketchError, NonPositiveLambdaError, InvalidDeltaError)


class UsageError(Exception):
    """Argumentos de línea de comandos inválidos."""


class KrrArgumentParser(argparse.ArgumentParser):
    """
    ArgumentParser que lanza UsageError en lugar de terminar con código 2.
    """

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"lista de números inválida: '{text}'") from exc


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _data_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--format", choices=[f.value for f in DataFormat], default=DataFormat.LIBSVM.value)
    parent.add_argument("--header", action="store_true", help="El CSV tiene una línea de cabecera.")
    parent.add_argument("--json", action="store_true", help="Salida JSON legible por máquina.")
    return parent


def _kernel_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--kernel", choices=["gaussian", "poly"], default="gaussian")
    parent.add_argument("--sigma", type=float, default=1.0)
    parent.add_argument("--gamma", type=float, default=1.0)
    parent.add_argument("--offset", type=float, default=0.0)
    parent.add_argument("--degree", type=int, default=2)
    parent.add_argument("--lambda", dest="lam", type=float, required=True)
    return parent


def _solver_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--lambda-p", dest="lambda_p", type=float, default=None,
                        help="λ del precondicionador (por defecto igual a --lambda).")
    parent.add_argument("--sketch", choices=[k.value for k in FeatureMapKind], default=None,
                        help="Primera etapa; por defecto rff (gaussiano) o tensorsketch (poly).")
    parent.add_argument("--s1", type=int, default=256)
    parent.add_argument("--s2", type=int, default=0, help="0 omite la etapa SRHT.")
    parent.add_argument("--s3", type=int, default=0, help="0 omite la etapa gaussiana.")
    parent.add_argument("--adaptive", action="store_true", help="Dimensionado adaptativo de s.")
    parent.add_argument("--s0", type=int, default=None)
    parent.add_argument("--s-max", dest="s_max", type=int, default=None)
    parent.add_argument("--tau", type=float, default=None, help="Por defecto 1e-3 (classify) o 1e-5 (regress).")
    parent.add_argument("--max-iter", dest="max_iter", type=int, default=1000)
    parent.add_argument("--seed", type=int, default=0)
    parent.add_argument("--task", choices=[t.value for t in Task], default=Task.REGRESS.value)
    return parent


def build_parser() -> KrrArgumentParser:
    parser = KrrArgumentParser(
        prog="sketchkrr",
        description="Kernel ridge regression con PCG precondicionado por random features.",
    )
    parser.add_argument("--version", action="version", version=f"{__app_name__} {__version__}")
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=KrrArgumentParser)

    data, kernel, solver = _data_options(), _kernel_options(), _solver_options()

    p_train = sub.add_parser("train", parents=[data, kernel, solver], help="Entrena y guarda un modelo.")
    p_train.add_argument("data")
    p_train.add_argument("--model", required=True, help="Fichero KRRM de salida.")

    p_predict = sub.add_parser("predict", parents=[data], help="Predice con un modelo guardado.")
    p_predict.add_argument("data")
    p_predict.add_argument("--model", required=True)
    p_predict.add_argument("--output", default=None, help="Fichero de salida (por defecto stdout).")

    p_eval = sub.add_parser("eval", parents=[data], help="Evalúa un modelo guardado.")
    p_eval.add_argument("data")
    p_eval.add_argument("--model", required=True)

    p_bench = sub.add_parser("bench", parents=[data, kernel, solver], help="PCG vs CG vs random features.")
    p_bench.add_argument("data")
    p_bench.add_argument("--test", default=None, help="Conjunto de prueba; si falta se reserva una fracción.")
    p_bench.add_argument("--test-fraction", dest="test_fraction", type=float, default=0.2)
    p_bench.add_argument("--lambda-p-factors", dest="lambda_p_factors", type=_float_list, default=[])
    p_bench.add_argument("--tau-grid", dest="tau_grid", type=_float_list, default=[])
    p_bench.add_argument("--profile", action="store_true", help="Adjunta estadísticas de cProfile.")

    p_statdim = sub.add_parser("statdim", parents=[data, kernel], help="Dimensión estadística s_λ(K).")
    p_statdim.add_argument("data")
    p_statdim.add_argument("--delta", type=float, default=1.0)

    p_serve = sub.add_parser("serve", help="Arranca la API HTTP con uvicorn.")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--model", action="append", default=[], metavar="NAME=PATH")
    return parser


# ---------------------------------------------------------------------------
# Construcción de configuración
# ---------------------------------------------------------------------------

def kernel_from_args(args: argparse.Namespace) -> KernelSpec:
    family = KernelFamily.GAUSSIAN if args.kernel == "gaussian" else KernelFamily.POLYNOMIAL
    return KernelSpec(
        family=family,
        sigma=args.sigma,
        gamma=args.gamma,
        offset=args.offset,
        degree=args.degree,
    )


def config_from_args(args: argparse.Namespace, kernel: KernelSpec) -> SolverConfig:
    if args.sketch is None:
        sketch = FeatureMapKind.RFF if kernel.is_gaussian else FeatureMapKind.TENSORSKETCH
    else:
        sketch = FeatureMapKind(args.sketch)
    return SolverConfig(
        task=Task(args.task),
        lam=args.lam,
        lambda_p=args.lambda_p,
        tau=args.tau,
        max_iter=args.max_iter,
        chain=ChainSpec(feature_map=sketch, s1=args.s1, s2=args.s2, s3=args.s3),
        adaptive=args.adaptive,
        s0=args.s0,
        s_max=args.s_max,
        seed=args.seed,
    )


def _emit(args: argparse.Namespace, report: CommandReport, text: str) -> None:
    print(report.model_dump_json(indent=2) if args.json else text)


# ---------------------------------------------------------------------------
# Subcomandos
# ---------------------------------------------------------------------------

def cmd_train(args: argparse.Namespace) -> int:
    kernel = kernel_from_args(args)
    config = config_from_args(args, kernel)
    task = config.task
    dataset = load_dataset(args.data, DataFormat(args.format), task, header=args.header)

    start = time.time()
    result = get_solver_service().train(dataset, kernel, config)
    save_model(args.model, result.model)
    elapsed = time.time() - start

    report = CommandReport(
        command="train",
        config={"kernel": kernel.model_dump(mode="json"), "solver": config.model_dump(mode="json")},
        per_rhs=[r.model_copy(update={"residual_history": []}) for r in result.report.per_rhs],
        wall_time_sec=elapsed,
        quality_history=result.quality_history,
        extra={"model": str(args.model), "sketch_size": result.report.sketch_size,
               "matvecs": result.report.matvecs},
    )
    lines = [f"modelo: {args.model}", f"sketch: {result.report.sketch_size}"]
    for j, rhs in enumerate(result.report.per_rhs):
        lines.append(
            f"rhs {j}: iteraciones={rhs.iterations} residuo={rhs.residual:.3e} "
            f"convergió={'sí' if rhs.converged else 'no'}"
        )
    lines.append(f"tiempo: {elapsed:.3f}s")
    _emit(args, report, "\n".join(lines))
    return EXIT_OK if result.report.converged else EXIT_NOT_CONVERGED


def cmd_predict(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    dataset = load_dataset(args.data, DataFormat(args.format), model.task, header=args.header, n_features=model.d)
    solver = get_solver_service()
    if model.task == Task.CLASSIFY:
        values = solver.classify(model, dataset.X).reshape(-1, 1)
    else:
        values = solver.predict(model, dataset.X)

    if args.json:
        report = CommandReport(command="predict", extra={"predictions": values.tolist()})
        print(report.model_dump_json(indent=2))
        return EXIT_OK

    text = "\n".join(" ".join(repr(float(v)) for v in row) for row in values)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    dataset = load_dataset(args.data, DataFormat(args.format), model.task, header=args.header, n_features=model.d)
    metrics = evaluate_model(get_solver_service(), model, dataset)
    report = CommandReport(command="eval", metric=metrics, wall_time_sec=metrics.wall_time_sec or 0.0)
    if model.task == Task.CLASSIFY:
        text = f"error_rate: {metrics.error_rate:.6f} (n={metrics.n})"
    else:
        text = f"mse: {metrics.mse:.6g} (n={metrics.n})"
    _emit(args, report, text)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    kernel = kernel_from_args(args)
    config = config_from_args(args, kernel)
    fmt = DataFormat(args.format)
    train = load_dataset(args.data, fmt, config.task, header=args.header)
    if args.test:
        test = load_dataset(args.test, fmt, config.task, header=args.header, n_features=train.d)
    else:
        train, test = train_test_split(train, args.test_fraction, config.seed)

    start = time.time()
    bench = get_bench_service().run(
        train, test, kernel, config,
        lambda_p_factors=args.lambda_p_factors,
        tau_grid=args.tau_grid,
        profile=args.profile,
    )
    report = CommandReport(
        command="bench",
        config={"kernel": kernel.model_dump(mode="json"), "solver": config.model_dump(mode="json")},
        wall_time_sec=time.time() - start,
        extra={"bench": bench.model_dump(mode="json")},
    )
    text = format_bench_table(bench)
    if bench.stats_text:
        text += "\n\n" + bench.stats_text
    _emit(args, report, text)
    return EXIT_OK


def cmd_statdim(args: argparse.Namespace) -> int:
    kernel = kernel_from_args(args)
    dataset = load_dataset(args.data, DataFormat(args.format), Task.REGRESS, header=args.header)
    start = time.time()
    stat = kernels.statdim_report(kernel, dataset.X, args.lam, args.delta)
    report = CommandReport(
        command="statdim",
        config={"kernel": kernel.model_dump(mode="json"), "lambda": args.lam, "delta": args.delta},
        wall_time_sec=time.time() - start,
        extra={"statdim": stat.model_dump(mode="json")},
    )
    lines = [repr(round(stat.s_lambda, 10))]
    if stat.sketch_size_one_level is not None:
        lines.append(f"sketch_size (1 nivel): {stat.sketch_size_one_level}")
        lines.append(f"sketch_size (2 niveles): {stat.sketch_size_two_level}")
    _emit(args, report, "\n".join(lines))
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from app.main import create_app

    models = {}
    for entry in args.model:
        name, sep, path = entry.partition("=")
        if not sep or not name or not path:
            raise UsageError(f"--model espera NAME=PATH (recibido '{entry}')")
        models[name] = path
    uvicorn.run(create_app(models), host=args.host, port=args.port)
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "statdim": cmd_statdim,
    "serve": cmd_serve,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    logger.debug("Ejecutando el subcomando '%s'.", args.command)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _USAGE_ERRORS as exc:
        print(f"error de configuración: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (KrrError, OSError, ValueError) as exc:
        print(f"error de datos: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
