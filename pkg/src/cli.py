"""
命令行入口

子命令：cluster, tree, simulate, build, solve, oracle, vss, sweep, calibrate, report。
每个子命令把结果写到 --out 目录，并写出 manifest.json。

退出码：0 成功；1 输入或校验错误（含未知参数）；2 求解器或运行环境错误；
3 模型不可行或无界（report.json 与 manifest.json 照常写出）。
"""
import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from .analysis.calibration import ObservedSeries, calibrate
from .analysis.sweeps import run_sweeps
from .analysis.vss import compute_vss
from .clustering.hierarchy import cluster_counties
from .config import Config
from .core.loader import ModelConfig, load_config
from .core.plan import AllocationPlan
from .data.loader import load_county_table, load_observations, load_vh_series
from .data.processor import aggregate_to_regions
from .epidemics.model import DynamicsParams
from .optimizer.fairness import parse_fairness
from .optimizer.instance import (
    BruteForceSolver,
    Instance,
    MilpSolver,
    build_instance_milp,
    export_report,
    prepare_instance,
)
from .optimizer.mps import emit_mps
from .optimizer.solvers import SolveOptions, SolveStatus, make_adapter
from .scenarios.process import VhProcess
from .scenarios.tree import build_tree
from .utils.errors import AdapterFaultError, ConfigError, SolverEnvironmentError, VentallocError
from .utils.logger import set_log_level, setup_logger
from .utils.manifest import build_manifest, write_manifest

logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_SOLVER = 2
EXIT_NO_SOLUTION = 3


class _Parser(argparse.ArgumentParser):
    """参数错误时打印用法到标准错误并以 1 退出"""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: 错误: {message}\n")
        sys.exit(EXIT_INVALID)


def _common(parser: argparse.ArgumentParser, config_required: bool = True) -> None:
    parser.add_argument("--config", type=Path, required=config_required, help="实验配置文件")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="覆盖配置项，可重复")
    parser.add_argument("--out", type=Path, default=Path("out"), help="输出目录")
    parser.add_argument("--seed", type=int, default=0, help="随机种子")
    parser.add_argument("--jobs", type=int, default=Config.DEFAULT_JOBS, help="并行进程数")
    parser.add_argument("--log-level", default=None, help="日志级别")


def _solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--fairness", default="utilitarian", help="utilitarian | equal | k=..[,t=..] | zeta=..")
    parser.add_argument("--solver", default=None, help="MILP 求解器可执行文件")
    parser.add_argument("--solver-format", default=None, choices=Config.SOLVER_FORMATS, help="解文件格式")
    parser.add_argument("--time-limit", type=float, default=Config.TIME_LIMIT, help="求解时间上限（秒）")
    parser.add_argument("--mip-gap", type=float, default=Config.MIP_GAP, help="相对 MIP gap")
    parser.add_argument("--keep-files", action="store_true", help="保留 MPS 与解文件")
    parser.add_argument("--oracle", action="store_true", help="改用穷举求解（仅小算例）")
    parser.add_argument("--limit", type=int, default=Config.BRUTE_FORCE_LIMIT, help="穷举空间上限")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ventalloc", description="呼吸机多阶段随机分配")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("cluster", help="县级 VH 序列聚类为区域")
    _common(p, config_required=False)
    p.add_argument("--series", type=Path, required=True, help="县级 VH 序列 (county_id, week, vh)")
    p.add_argument("--counties", type=Path, default=None, help="县级基础表，用于汇总区域容量与 VH")
    p.add_argument("--threshold", type=float, default=Config.CLUSTER_THRESHOLD, help="截断距离")
    p.add_argument("--linkage", default=Config.CLUSTER_LINKAGE, help="链接方式")
    p.add_argument("--unweighted", action="store_true", help="VH 汇总不按人口加权")

    p = sub.add_parser("tree", help="导出情景树")
    _common(p, config_required=False)
    p.add_argument("--stages", type=int, default=None, help="决策阶段数（无配置时使用单位尺度过程）")

    p = sub.add_parser("simulate", help="按分配方案仿真所有情景")
    _common(p)
    p.add_argument("--plan", type=Path, default=None, help="分配方案 CSV，缺省为零分配")

    p = sub.add_parser("build", help="构造 MILP 并导出 MPS")
    _common(p)
    p.add_argument("--fairness", default="utilitarian")

    for name, text in (("solve", "调用外部求解器求解"), ("oracle", "穷举求解"),
                       ("vss", "计算 EEV 与 VSS"), ("sweep", "运行配置中的扫描实验")):
        p = sub.add_parser(name, help=text)
        _common(p)
        _solver_flags(p)

    p = sub.add_parser("calibrate", help="随机搜索校准区域参数")
    _common(p)
    p.add_argument("--observed", type=Path, required=True, help="观测 (region, week, infections, vaccinations)")
    p.add_argument("--bound", action="append", default=[], metavar="NAME=LO:HI", help="参数搜索区间，可重复")
    p.add_argument("--budget", type=int, default=500, help="候选点数")

    p = sub.add_parser("report", help="由分配方案生成期望分配与区域死亡表")
    _common(p)
    p.add_argument("--plan", type=Path, required=True, help="分配方案 CSV")
    return parser


def _load(args: argparse.Namespace) -> ModelConfig:
    return load_config(args.config, args.overrides)


def _solver(args: argparse.Namespace):
    if args.command == "oracle" or getattr(args, "oracle", False):
        return BruteForceSolver(limit=args.limit, n_jobs=args.jobs)
    options = SolveOptions(
        time_limit=args.time_limit,
        mip_gap=args.mip_gap,
        workdir=(args.out / "solver") if args.keep_files else None,
        keep_files=args.keep_files,
    )
    return MilpSolver(make_adapter(args.solver_format, args.solver), options)


def _read_plan(path: Path, instance: Instance) -> AllocationPlan:
    frame = pd.read_csv(path)
    return AllocationPlan.from_frame(frame, instance.tree.n_scenarios, instance.stage_boundaries,
                                     instance.region_ids)


def _write_json(path: Path, payload: Any) -> None:
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True, default=str),
                    encoding="utf-8")


def cmd_cluster(args: argparse.Namespace) -> List[Path]:
    series = load_vh_series(args.series)
    result = cluster_counties(series, args.threshold, args.linkage)
    result.to_csv(args.out / "assignment.csv")
    result.dendrogram_to_csv(args.out / "dendrogram.csv")
    inputs = [args.series]
    if args.counties is not None:
        counties = load_county_table(args.counties)
        regional = aggregate_to_regions(counties, result.assignment, series, weighted=not args.unweighted)
        regional.capacity_frame().to_csv(args.out / "regional_capacity.csv", index=False)
        regional.vh_frame().to_csv(args.out / "regional_vh.csv", index=False)
        inputs.append(args.counties)
    print(f"{len(series)} 个县 -> {result.n_regions} 个区域")
    return inputs


def cmd_tree(args: argparse.Namespace) -> List[Path]:
    if args.config is not None:
        config = _load(args)
        instance = prepare_instance(config)
        tree = instance.tree
        if args.stages is not None and args.stages != tree.n_stages:
            logger.warning(f"--stages {args.stages} 与配置的 {tree.n_stages} 个阶段不一致，以配置为准")
        instance.vh.to_frame(instance.region_ids).to_csv(args.out / "vh_paths.csv", index=False)
    else:
        stages = args.stages or 1
        tree = build_tree(VhProcess.standard(stages), stages)
    tree.to_frame().to_csv(args.out / "tree.csv", index=False)
    print(f"{tree.n_stages} 个阶段, {tree.n_scenarios} 个情景")
    return [args.config] if args.config else []


def cmd_simulate(args: argparse.Namespace) -> List[Path]:
    instance = prepare_instance(_load(args))
    plan = _read_plan(args.plan, instance) if args.plan else instance.zero_plan()
    trajectory = instance.simulate_plan(plan)
    trajectory.to_csv(args.out / "trajectory.csv")
    trajectory.regional_deaths(instance.tree.probabilities).to_csv(args.out / "regional_deaths.csv", index=False)
    print(f"期望死亡数: {trajectory.expected_deaths(instance.tree.probabilities):.4f}")
    return [args.config] + ([args.plan] if args.plan else [])


def cmd_build(args: argparse.Namespace) -> List[Path]:
    instance = prepare_instance(_load(args))
    model = build_instance_milp(instance, parse_fairness(args.fairness))
    emit_mps(model, args.out / "model.mps")
    summary = model.summary()
    _write_json(args.out / "model_summary.json", summary)
    print(f"MILP: {summary['columns']} 列, {summary['rows']} 行, {summary['nonzeros']} 个非零元")
    return [args.config]


def cmd_solve(args: argparse.Namespace) -> List[Path]:
    instance = prepare_instance(_load(args))
    report = _solver(args).solve_instance(instance, parse_fairness(args.fairness))
    export_report(report, instance, args.out)
    if report.status in (SolveStatus.INFEASIBLE, SolveStatus.UNBOUNDED):
        print(f"模型没有最优解: {report.status.value}，结果见 {args.out / 'report.json'}", file=sys.stderr)
        args.exit_code = EXIT_NO_SOLUTION
        return [args.config]
    print(f"{report.status.value}: 目标值 {report.objective}")
    if not report.status.has_solution:
        raise SolverEnvironmentError(f"没有得到可行解: {report.status.value} {report.message}")
    return [args.config]


def cmd_vss(args: argparse.Namespace) -> List[Path]:
    instance = prepare_instance(_load(args))
    report = compute_vss(instance, _solver(args), parse_fairness(args.fairness))
    report.to_frame().to_csv(args.out / "vss.csv", index=False)
    if report.ev_allocation is not None:
        report.ev_allocation.to_csv(args.out / "ev_allocation.csv", index=False)
    _write_json(args.out / "vss.json", {
        "z_star": report.z_star,
        "ev_objective": report.ev_objective,
        "failures": [asdict(f) for f in report.failures],
        "warnings": report.warnings,
    })
    print(report.to_frame().to_string(index=False))
    return [args.config]


def cmd_sweep(args: argparse.Namespace) -> List[Path]:
    config = _load(args)
    if not config.sweeps:
        raise ConfigError("配置中没有 sweeps 区块")
    instance = prepare_instance(config)
    results = run_sweeps(instance, _solver(args), config.sweeps, n_jobs=args.jobs)
    for kind, result in results.items():
        result.table.to_csv(args.out / f"{kind}.csv", index=False)
        result.long_format().to_csv(args.out / f"{kind}_long.csv", index=False)
        if result.regression is not None:
            result.regression.to_frame().to_csv(args.out / f"{kind}_regression.csv", index=False)
            _write_json(args.out / f"{kind}_regression.json", result.regression.as_dict())
        if result.properties:
            _write_json(args.out / f"{kind}_properties.json", result.properties)
        print(f"{kind}: {len(result.table)} 个格子")
    return [args.config]


def _parse_bounds(items: Sequence[str]) -> Dict[str, tuple]:
    bounds = {}
    for item in items:
        try:
            name, rng = item.split("=", 1)
            lo, hi = rng.split(":", 1)
            bounds[name.strip()] = (float(lo), float(hi))
        except ValueError:
            raise ConfigError(f"--bound 格式应为 NAME=LO:HI: {item}")
    if not bounds:
        raise ConfigError("至少需要一个 --bound")
    return bounds


def cmd_calibrate(args: argparse.Namespace) -> List[Path]:
    config = _load(args)
    params = DynamicsParams.from_params(config.global_params, config.regions)
    observed = ObservedSeries.from_frame(load_observations(args.observed), config.region_ids)
    report = calibrate(params, observed, _parse_bounds(args.bound), args.budget, seed=args.seed,
                       h0=config.vh.h0, migration=config.migration, n_jobs=args.jobs)
    report.tuned.to_csv(args.out / "tuned.csv", index=False)
    report.metrics_frame().to_csv(args.out / "metrics.csv", index=False)
    _write_json(args.out / "fit.json", report.summary())
    print(report.metrics_frame().to_string(index=False))
    return [args.config, args.observed]


def cmd_report(args: argparse.Namespace) -> List[Path]:
    instance = prepare_instance(_load(args))
    plan = _read_plan(args.plan, instance)
    probs = instance.tree.probabilities
    plan.expected_allocation(probs).to_csv(args.out / "expected_allocation.csv", index=False)
    trajectory = instance.simulate_plan(plan)
    trajectory.regional_deaths(probs).to_csv(args.out / "regional_deaths.csv", index=False)
    frame = trajectory.to_frame()
    frame.melt(id_vars=["scenario", "period", "region"], var_name="variable", value_name="value").to_csv(
        args.out / "trajectory_long.csv", index=False)
    print(f"期望死亡数: {trajectory.expected_deaths(probs):.4f}")
    return [args.config, args.plan]


COMMANDS = {
    "cluster": cmd_cluster,
    "tree": cmd_tree,
    "simulate": cmd_simulate,
    "build": cmd_build,
    "solve": cmd_solve,
    "oracle": cmd_solve,
    "vss": cmd_vss,
    "sweep": cmd_sweep,
    "calibrate": cmd_calibrate,
    "report": cmd_report,
}


def _config_document(args: argparse.Namespace) -> Optional[Dict[str, Any]]:
    if getattr(args, "config", None) is None:
        return None
    try:
        return _load(args).document
    except VentallocError:
        return None


def main(argv: Optional[Sequence[str]] = None) -> int:
    """主程序入口函数"""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.log_level:
        set_log_level(args.log_level)

    try:
        Config.validate_config()
        args.out.mkdir(parents=True, exist_ok=True)
        inputs = COMMANDS[args.command](args)
        arguments = {k: v for k, v in vars(args).items() if k != "overrides"}
        arguments["overrides"] = list(args.overrides)
        write_manifest(args.out, build_manifest(args.command, arguments, _config_document(args),
                                                args.seed, [p for p in inputs if p is not None]))
    except (SolverEnvironmentError, AdapterFaultError) as e:
        logger.error(f"求解器错误: {e}")
        print(f"求解器错误: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, FileNotFoundError) as e:
        logger.error(f"输入错误: {e}")
        print(f"输入错误: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:
        logger.error(f"程序运行出错: {e}")
        print(f"程序出错: {e}", file=sys.stderr)
        return EXIT_SOLVER

    return getattr(args, "exit_code", EXIT_OK)


if __name__ == "__main__":
    sys.exit(main())
