"""Report generation for constants and sampling campaigns."""

import csv
import io
import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Union

from src.models import ComparisonRow, ExperimentReport, SingularityReport


# Configure logging
logger = logging.getLogger(__name__)


class ReportFormat(Enum):
    """Supported report formats."""
    JSON = "json"
    TXT = "txt"
    MARKDOWN = "markdown"
    CSV = "csv"


def _fmt(value: Any) -> str:
    """Compact text form of a report value."""
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.10g}"
    return str(value)


class ReportService:
    """
    Renders singularity and experiment reports.

    JSON output is key-sorted and carries no wall-clock fields, so equal inputs give
    byte-identical files.
    """

    def render_json(self, data: Dict[str, Any]) -> str:
        return json.dumps(data, sort_keys=True, indent=2) + "\n"

    def render_constants(self, report: SingularityReport, output_format: ReportFormat) -> str:
        """
        Render a singularity report.

        Args:
            report: The constants to render
            output_format: JSON, TXT or MARKDOWN

        Returns:
            The report content as a string
        """
        if output_format == ReportFormat.JSON:
            return self.render_json(report.to_dict())
        elif output_format == ReportFormat.TXT:
            return self._constants_txt(report)
        elif output_format == ReportFormat.MARKDOWN:
            return self._constants_markdown(report)
        else:
            raise ValueError(f"Unsupported format for constants: {output_format}")

    def render_experiment(self, report: ExperimentReport, output_format: ReportFormat) -> str:
        """
        Render an experiment report.

        Args:
            report: The campaign report
            output_format: JSON, TXT, MARKDOWN, or CSV (census table only)

        Returns:
            The report content as a string
        """
        if output_format == ReportFormat.JSON:
            return self.render_json(report.to_dict())
        elif output_format == ReportFormat.TXT:
            return self._experiment_txt(report)
        elif output_format == ReportFormat.MARKDOWN:
            return self._experiment_markdown(report)
        elif output_format == ReportFormat.CSV:
            return self.census_csv(report)
        else:
            raise ValueError(f"Unsupported format: {output_format}")

    def census_csv(self, report: ExperimentReport) -> str:
        """Census table as ``k,predicted,empirical,rel_err``."""
        output = io.StringIO()
        writer = csv.writer(output, lineterminator="\n")
        writer.writerow(["k", "predicted", "empirical", "rel_err"])
        for k, predicted, empirical, rel_err in report.census_rows:
            writer.writerow([k, repr(predicted),
                             "" if empirical is None else repr(empirical),
                             "" if rel_err is None else repr(rel_err)])
        return output.getvalue()

    def write_experiment(self, report: ExperimentReport, path: Union[str, Path]) -> List[Path]:
        """
        Write the JSON report and the census CSV next to it (``<path>.census.csv``).

        Returns:
            The paths written
        """
        json_path = Path(path)
        csv_path = Path(f"{json_path}.census.csv")
        if json_path.parent and not json_path.parent.exists():
            json_path.parent.mkdir(parents=True, exist_ok=True)
        json_path.write_text(self.render_experiment(report, ReportFormat.JSON), encoding="utf-8")
        csv_path.write_text(self.census_csv(report), encoding="utf-8")
        logger.info(f"Wrote {json_path} and {csv_path}")
        return [json_path, csv_path]

    def _constants_lines(self, report: SingularityReport) -> List[tuple]:
        return [
            ("Class", report.class_spec),
            ("y", report.y),
            ("Regime", f"{report.regime.value} (lambda {report.regime.sign})"),
            ("lambda", report.lambda_value),
            ("Phi_z at root", report.phi_z_at_root),
            ("rhoN", report.rho_n),
            ("N0", report.n0),
            ("tau", report.tau),
            ("mu", report.mu),
            ("aT", report.a_t),
            ("gammaT", report.gamma_t),
            ("beta", report.beta_lemma),
            ("beta (singularity)", report.beta_singular),
            ("beta (fitted)", report.beta_fitted),
            ("condition B", report.condition_b),
            ("det M", report.det_m),
            ("det M closed form", report.det_closed_form),
            ("p_k tail mass", report.pk_tail_mass),
            ("Near critical", report.near_critical),
            ("Entire function", report.entire_function),
            ("Pole", report.pole_type),
        ]

    def _constants_txt(self, report: SingularityReport) -> str:
        lines = ["=" * 60, f" CONSTANTS FOR {report.class_spec.upper()} ", "=" * 60, ""]
        for label, value in self._constants_lines(report):
            lines.append(f"{label + ':':<22}{_fmt(value)}")
        lines.append("")
        lines.append("alpha vector:")
        for name, value in report.alpha_vec.to_dict().items():
            lines.append(f"  {name}: {_fmt(value)}")
        lines.append("")
        lines.append("p_k (first entries):")
        for k in sorted(report.pk)[:10]:
            lines.append(f"  {k}: {_fmt(report.pk[k])}")
        return "\n".join(lines) + "\n"

    def _constants_markdown(self, report: SingularityReport) -> str:
        lines = [f"# Constants for `{report.class_spec}`", "", "| Quantity | Value |", "|---|---|"]
        for label, value in self._constants_lines(report):
            lines.append(f"| {label} | {_fmt(value)} |")
        return "\n".join(lines) + "\n"

    def _comparison_line(self, row: ComparisonRow) -> str:
        return (f"[{row.status.value:>17}] {row.source:<27} {row.statistic:<22} "
                f"predicted={_fmt(row.predicted)} empirical={_fmt(row.empirical)} "
                f"rel_err={_fmt(row.rel_err)} tol={_fmt(row.tolerance)}")

    def _experiment_txt(self, report: ExperimentReport) -> str:
        cfg = report.config
        emp = report.empirical
        lines = ["=" * 60, f" EXPERIMENT {cfg.class_spec.upper()} n={cfg.n} ", "=" * 60, ""]
        lines.append("SUMMARY")
        lines.append("-" * 20)
        lines.append(f"Regime: {report.constants.regime.value}")
        lines.append(f"Mode: {cfg.mode}, samples: {emp.get('samples', 0)}, workers: {cfg.workers}")
        lines.append(f"Acceptance rate: {_fmt(report.acceptance.get('acceptanceRate'))}")
        if emp.get("samples"):
            lines.append(f"Mean v: {_fmt(emp['vMean'])}, mean e: {_fmt(emp['eMean'])}")
            lines.append(f"Mean C1/n: {_fmt(emp['c1OverN']['mean'])}")
        lines.append("")
        lines.append("COMPARISONS")
        lines.append("-" * 20)
        for row in report.comparisons:
            lines.append(self._comparison_line(row))
        lines.append("")
        lines.append("ALL PASSED" if report.all_passed() else "SOME COMPARISONS FAILED")
        return "\n".join(lines) + "\n"

    def _experiment_markdown(self, report: ExperimentReport) -> str:
        lines = [f"# Experiment `{report.config.class_spec}` (n={report.config.n})", "",
                 "| Source | Statistic | Predicted | Empirical | Rel. error | Tolerance | Status |",
                 "|---|---|---|---|---|---|---|"]
        for row in report.comparisons:
            lines.append(f"| {row.source} | {row.statistic} | {_fmt(row.predicted)} | "
                         f"{_fmt(row.empirical)} | {_fmt(row.rel_err)} | {_fmt(row.tolerance)} | "
                         f"{row.status.value} |")
        return "\n".join(lines) + "\n"
