import logging
from fractions import Fraction
from typing import Callable, Dict, List

import numpy as np

from cli.config import ExperimentConfig
from cli.writers import ArtifactWriter
from constants import EXIT_INTERNAL, EXIT_OK, EXIT_VALIDATION, TABLE1_ORDER
from errors import DomainError, InternalInconsistency
from systems.linear_hierarchy import (
    CoefVector,
    EquivalenceKind,
    Table1Row,
    TransformParams,
    apply_equivalence_transform,
    convergence_domains,
    flow_solution,
    group_matrix,
    reparam_ctilde,
    restrictions_ok,
    solve_ivp_pair,
)
from systems.moment_hierarchy import (
    forward_a_coefficients,
    moment_radius,
    recursion_series,
    reference_radius,
    reference_rows,
)
from systems.nonlinear_hierarchy import (
    LambdaTable,
    SpecialSolution,
    SpecialSolutionId,
    coverage_check,
    matched_lambda_y3,
)
from systems.riccati_single import (
    PointTransform,
    classify_reparam,
    determining_residual,
    standard_fields,
)
from systems.uniqueness_lab import BumpSpec, figure_rows
from utils.scalars import EXACT

logger = logging.getLogger(__name__)


class ExperimentRunner:
    """Runs one command and writes its artifacts."""

    RICCATI_MEMBERS = (Fraction(-1, 2), Fraction(3, 10), Fraction(7, 10))
    RICCATI_EPSILONS = (Fraction(1, 10), Fraction(3, 10))
    RICCATI_POINTS = ((Fraction(1, 2), Fraction(1, 3)), (Fraction(2), Fraction(-5, 7)),
                      (Fraction(-3, 4), Fraction(9, 4)), (Fraction(5, 3), Fraction(1)))
    FIGURE_LEVELS = (1, 2, 3, 4)
    FIGURE_GRID = np.linspace(-2.0, 2.0, 81)
    FIG2_GAMMAS = (1.0, 0.1, 0.01, 0.001)
    FIG3_LEVELS = 4
    FIG3_REACH = 0.95
    COVERAGE_SOLUTIONS = (SpecialSolutionId.Y1, SpecialSolutionId.Y2, SpecialSolutionId.Y3)

    def __init__(self, config: ExperimentConfig, writer: ArtifactWriter = None):
        self.config = config
        self.writer = writer or ArtifactWriter(config.out)
        self._commands: Dict[str, Callable[[], None]] = {
            "riccati": self._run_riccati,
            "linear-repro": self._run_linear_repro,
            "table1": self._run_table1,
            "fig1": self._run_fig1,
            "fig2": self._run_fig2,
            "fig3": self._run_fig3,
            "nonlinear-coverage": self._run_nonlinear_coverage,
            "moments": self._run_moments,
        }

    def run(self) -> None:
        logger.info("running %s", self.config.command)
        self._commands[self.config.command]()
        logger.info("finished %s (%d files)", self.config.command, len(self.writer.written))

    def _seed(self, values) -> tuple:
        if self.config.backend == EXACT:
            return tuple(values)
        return tuple(float(v) for v in values)

    def _scalar(self, value):
        return value if self.config.backend == EXACT else float(value)

    def _run_riccati(self) -> None:
        rows = []
        for transform in PointTransform:
            for c in self.RICCATI_MEMBERS:
                for epsilon in self.RICCATI_EPSILONS:
                    result = classify_reparam(transform, epsilon, c)
                    rows.append({
                        "transform": transform.value, "c": c, "epsilon": epsilon,
                        "kind": result.kind, "c_tilde": "" if result.c_tilde is None else result.c_tilde,
                        "stated": result.stated, "fit_residual": result.fit_residual,
                    })
        self.writer.write_csv("riccati.csv", ["transform", "c", "epsilon", "kind", "c_tilde",
                                              "stated", "fit_residual"], rows)
        fields = [{"field": name, "residual": determining_residual(field, self.RICCATI_POINTS)}
                  for name, field in standard_fields().items()]
        self.writer.write_csv("riccati_fields.csv", ["field", "residual"], fields)

    def _run_linear_repro(self) -> None:
        depth, order, epsilon = self.config.depth, self.config.order, self.config.epsilon
        if epsilon == 0:
            raise DomainError("linear-repro needs a nonzero eps")
        ones = CoefVector(self._seed([Fraction(1)] * (depth + order)))
        reparam_ctilde(ones, epsilon, depth)
        c_tilde = group_matrix(0, epsilon, depth + order).apply(ones)
        transformed = apply_equivalence_transform(
            EquivalenceKind.L2, TransformParams(epsilon), flow_solution(ones, depth, order))
        direct = flow_solution(c_tilde, depth, order)
        exact = transformed.backend == EXACT and direct.backend == EXACT
        if exact and transformed.unit_exponent != direct.unit_exponent:
            raise InternalInconsistency("L2 image and flow of c~ carry different units")
        folded, reference = transformed.materialized(), direct.materialized()
        grid = self._inside_grid(epsilon)
        image_values = [transformed.evaluate(x)[0] for x in grid]
        flow_values = [direct.evaluate(x)[0] for x in grid]
        rows = []
        for n in range(1, depth + 1):
            if exact and not transformed.level(n).same_coefficients(direct.level(n)):
                raise InternalInconsistency(f"level {n}: L2 image differs from flow of c~")
            mismatch = max(abs(float(p) - float(q))
                           for p, q in zip(folded.level(n).coeffs, reference.level(n).coeffs))
            for x, lhs, rhs in zip(grid, image_values, flow_values):
                rows.append({"x": x, "level": n, "yB": float(lhs[n - 1]),
                             "flow_ctilde": float(rhs[n - 1]), "coeff_mismatch": mismatch})
        self.writer.write_csv("linear_repro.csv",
                              ["x", "level", "yB", "flow_ctilde", "coeff_mismatch"], rows)
        checks = []
        for x_tilde in grid:
            for a in (Fraction(0), Fraction(1, 4), Fraction(-1, 4)):
                check = restrictions_ok(x_tilde, epsilon, a)
                checks.append({"x_tilde": x_tilde, "a": a, "first": check.first,
                               "second": check.second, "third": check.third})
        self.writer.write_csv("restrictions.csv", ["x_tilde", "a", "first", "second", "third"], checks)

    def _inside_grid(self, epsilon) -> List[Fraction]:
        """Points with |x eps| <= 1/2."""
        scale = 1 / (2 * abs(Fraction(epsilon)))
        return [Fraction(k, 2) * scale for k in (-2, -1, 0, 1, 2)]

    def _run_table1(self) -> None:
        rows = []
        for row in Table1Row:
            report = convergence_domains(row, self.config.epsilon, order=TABLE1_ORDER,
                                         family=self.config.seed_family_key)
            rows.append({"row": row.value, "ya_domain": report.ya.describe(),
                         "yb_domain": report.yb.describe(),
                         "ya_radius": report.ya.estimate.describe(),
                         "yb_inner_radius": report.yb.estimate.describe()})
        self.writer.write_csv("table1.csv",
                              ["row", "ya_domain", "yb_domain", "ya_radius", "yb_inner_radius"], rows)

    def _write_figure(self, name: str, specs: List[BumpSpec], levels) -> None:
        curves, summary = [], []
        for spec in specs:
            samples, intervals = figure_rows(spec, levels, self.FIGURE_GRID, float(self.config.delta))
            curves += [{"n": r.level, "gamma": r.gamma, "x": r.x, "yI": r.y_reference,
                        "yII": r.y_alternative, "in_interval": r.in_interval} for r in samples]
            summary += [{"n": i.level, "gamma": i.gamma, "delta": i.delta,
                         "interval_length": i.length} for i in intervals]
        self.writer.write_csv(name, ["n", "gamma", "x", "yI", "yII", "in_interval"], curves)
        self.writer.write_csv("summary.csv", ["n", "gamma", "delta", "interval_length"], summary)

    def _run_fig1(self) -> None:
        self._write_figure("fig1.csv", [BumpSpec(float(self.config.gamma))], self.FIGURE_LEVELS)

    def _run_fig2(self) -> None:
        self._write_figure("fig2.csv", [BumpSpec(gamma) for gamma in self.FIG2_GAMMAS], (1,))

    def _run_fig3(self) -> None:
        epsilon, order = self.config.epsilon, self.config.order
        size = self.FIG3_LEVELS + order
        seed = CoefVector(self._seed([Fraction(1)] * size), unit_exponent=-epsilon)
        pair = solve_ivp_pair(group_matrix(0, epsilon, size).apply(seed), epsilon,
                              self.FIG3_LEVELS, order)
        rows = []
        for x in self.FIGURE_GRID:
            x = float(x)
            if 1 + float(epsilon) * x == 0:
                continue
            inside = abs(x * float(epsilon)) < self.FIG3_REACH
            ya = pair.evaluate_a(x) if inside else [""] * self.FIG3_LEVELS
            yb = pair.evaluate_b(x)
            for n in range(self.FIG3_LEVELS):
                rows.append({"x": x, "n": n + 1, "yA": ya[n], "yB": yb[n]})
        self.writer.write_csv("fig3.csv", ["x", "n", "yA", "yB"], rows)

    def _run_nonlinear_coverage(self) -> None:
        a, depth, order = self._scalar(self.config.a), self.config.depth, self.config.order
        rows = []
        for which in self.COVERAGE_SOLUTIONS:
            rows += coverage_check(SpecialSolution(which), a, depth, order).rows()
        self.writer.write_csv("coverage.csv",
                              ["solution", "a", "level", "radius_estimate", "covers_origin"], rows)
        matched = LambdaTable(tuple(tuple(matched_lambda_y3(a, n, k) for k in range(order + 1))
                                    for n in range(1, depth + 1)), a, ())
        self.writer.write_json("lambda_table.json", {
            "solution": SpecialSolutionId.Y3.value,
            "recurrence_residual": matched.recurrence_residual(),
            **matched.to_dict(),
        })

    def _run_moments(self) -> None:
        series = recursion_series()
        rows = reference_rows(self.config.tmax, series=series)
        self.writer.write_csv("moments.csv", ["t", "n", "u_n", "source"], rows)
        self.writer.write_json("a_coefficients.json", forward_a_coefficients(4, 12).to_dict())
        u0_radius, u1_radius = moment_radius(series)
        self.writer.write_json("moment_radius.json", {
            "u0": u0_radius.to_dict(), "u1": u1_radius.to_dict(), "reference": reference_radius(),
        })


def run(config: ExperimentConfig) -> int:
    """Run a command; exit 0 on success, 2 on invalid input, 1 on internal inconsistency."""
    try:
        ExperimentRunner(config).run()
    except InternalInconsistency as error:
        logger.error("internal inconsistency: %s", error)
        return EXIT_INTERNAL
    except ValueError as error:
        logger.error("validation failed: %s", error)
        return EXIT_VALIDATION
    return EXIT_OK
