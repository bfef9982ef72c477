"""Comparison feature sets: bag-of-words vectors and lexical code-quality
metrics for IaC scripts.

The quality scanner is keyword/pattern level, not a grammar: strings that
happen to contain keywords inflate counts, which is an accepted precision
limit of a lexical pass.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from devminer.errors import EncodingError


@dataclass(frozen=True)
class BowVector:
    script_path: str
    token_counts: Mapping[str, int]


@dataclass(frozen=True)
class CodeQualityVector:
    script_path: str
    filelength: int
    complexity: int
    parameters: int
    execs: int
    lint_warnings: int
    fan_in: int


_TOKEN_RE = re.compile(r"[0-9a-zA-Z]+")


def bow_extract(script_text: str | bytes, script_path: str = "") -> BowVector:
    """Lowercased alphanumeric token counts of one script."""
    if isinstance(script_text, bytes):
        try:
            script_text = script_text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EncodingError(exc.reason, exc.start) from exc
    counts: dict[str, int] = {}
    for token in _TOKEN_RE.findall(script_text.lower()):
        counts[token] = counts.get(token, 0) + 1
    return BowVector(script_path=script_path, token_counts=counts)


_CONTROL_RE = re.compile(r"\b(?:if|elsif|unless|case)\b")
_CASE_OPEN_RE = re.compile(r"\bcase\b[^{]*\{")
_CASE_ALT_RE = re.compile(r"^[^:{}]+:\s*(\{.*)?$")
_EXEC_RE = re.compile(r"\bexec\b")
_CLASS_DECL_RE = re.compile(r"^\s*(?:class|define)\s+((?:::)?\w+(?:::\w+)*)", re.MULTILINE)
_INCLUDE_RE = re.compile(r"^\s*(?:include|require)\s+((?:::)?\w+(?:::\w+)*)", re.MULTILINE)
_SIGNATURE_RE = re.compile(r"^\s*(?:class|define)\s+(?:::)?\w+(?:::\w+)*\s*\(", re.MULTILINE)
_PARAM_RE = re.compile(r"\$\w+")


def _physical_lines(text: str) -> int:
    if not text:
        return 0
    return text.count("\n") + (0 if text.endswith("\n") else 1)


def _case_alternatives(text: str) -> int:
    depth = 0
    case_depths: list[int] = []
    count = 0
    for line in text.splitlines():
        stripped = line.strip()
        if case_depths and depth == case_depths[-1] and _CASE_ALT_RE.match(stripped):
            count += 1
        opens = line.count("{")
        closes = line.count("}")
        if _CASE_OPEN_RE.search(line) and opens > closes:
            case_depths.append(depth + 1)
        depth += opens - closes
        while case_depths and depth < case_depths[-1]:
            case_depths.pop()
    return count


def _signature_params(text: str) -> int:
    total = 0
    for match in _SIGNATURE_RE.finditer(text):
        start = match.end()  # just past the opening parenthesis
        depth = 1
        pos = start
        while pos < len(text) and depth > 0:
            ch = text[pos]
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            pos += 1
        total += len(_PARAM_RE.findall(text[start : pos - 1]))
    return total


def declared_classes(text: str) -> set[str]:
    return {name.removeprefix("::") for name in _CLASS_DECL_RE.findall(text)}


def included_classes(text: str) -> list[str]:
    return [name.removeprefix("::") for name in _INCLUDE_RE.findall(text)]


class QualityScanner:
    """Scans a dataset of scripts; fan-in needs the dataset-wide symbol table."""

    def __init__(
        self,
        scripts: Mapping[str, str],
        lint_warnings: Mapping[str, int] | None = None,
    ):
        self.scripts = dict(scripts)
        self.lint_warnings = dict(lint_warnings or {})
        self._declarers: dict[str, list[str]] = {}
        for path in sorted(self.scripts):
            for name in declared_classes(self.scripts[path]):
                self._declarers.setdefault(name, []).append(path)
        self._fan_in = {path: 0 for path in self.scripts}
        self.total_resolutions = 0
        for path in sorted(self.scripts):
            for name in included_classes(self.scripts[path]):
                for target in self._declarers.get(name, []):
                    if target != path:
                        self._fan_in[target] += 1
                        self.total_resolutions += 1

    def scan(self, path: str) -> CodeQualityVector:
        text = self.scripts[path]
        complexity = len(_CONTROL_RE.findall(text)) + _case_alternatives(text)
        return CodeQualityVector(
            script_path=path,
            filelength=_physical_lines(text),
            complexity=complexity,
            parameters=_signature_params(text),
            execs=len(_EXEC_RE.findall(text)),
            lint_warnings=self.lint_warnings.get(path, 0),
            fan_in=self._fan_in[path],
        )

    def scan_all(self) -> list[CodeQualityVector]:
        return [self.scan(path) for path in sorted(self.scripts)]


def scan_quality(
    script_text: str,
    script_path: str,
    dataset: Mapping[str, str],
    lint_warnings: Mapping[str, int] | None = None,
) -> CodeQualityVector:
    """Quality vector of one script given the whole dataset for fan-in."""
    merged = dict(dataset)
    merged[script_path] = script_text
    return QualityScanner(merged, lint_warnings).scan(script_path)


def load_scripts_dir(directory: str | Path, extensions: Sequence[str] = (".pp",)) -> dict[str, str]:
    """Read every script under a directory into path -> text (relative paths)."""
    root = Path(directory)
    scripts: dict[str, str] = {}
    for path in sorted(root.rglob("*")):
        if path.is_file() and path.suffix in set(extensions):
            data = path.read_bytes()
            try:
                scripts[str(path.relative_to(root))] = data.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise EncodingError(f"{path}: {exc.reason}", exc.start) from exc
    return scripts


QUALITY_HEADER = ("script", "filelength", "complexity", "parameters", "execs", "lint_warnings", "fan_in")


def write_bow_csv(vectors: Sequence[BowVector], path: str | Path) -> None:
    """Sparse triples: script,token,count."""
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(("script", "token", "count"))
        for vec in vectors:
            for token in sorted(vec.token_counts):
                writer.writerow((vec.script_path, token, vec.token_counts[token]))


def read_bow_csv(path: str | Path) -> list[BowVector]:
    by_script: dict[str, dict[str, int]] = {}
    with Path(path).open(encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            by_script.setdefault(row["script"], {})[row["token"]] = int(row["count"])
    return [BowVector(script_path=s, token_counts=c) for s, c in sorted(by_script.items())]


def write_quality_csv(vectors: Sequence[CodeQualityVector], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(QUALITY_HEADER)
        for vec in vectors:
            writer.writerow(
                (vec.script_path, vec.filelength, vec.complexity, vec.parameters,
                 vec.execs, vec.lint_warnings, vec.fan_in)
            )


def read_quality_csv(path: str | Path) -> list[CodeQualityVector]:
    rows: list[CodeQualityVector] = []
    with Path(path).open(encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            rows.append(
                CodeQualityVector(
                    script_path=row["script"],
                    filelength=int(row["filelength"]),
                    complexity=int(row["complexity"]),
                    parameters=int(row["parameters"]),
                    execs=int(row["execs"]),
                    lint_warnings=int(row["lint_warnings"]),
                    fan_in=int(row["fan_in"]),
                )
            )
    return rows
