"""Rule-based function-type classification of robot software repositories.

A repo is described by three attributes, inspected in a fixed precedence
order: its name, the manifest description, and a cleaned-up README. The
first attribute that matches any rule decides the type; rule priority
breaks ties across types within one attribute.
"""
from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple


class ClassifierError(Exception):
    pass


class ManifestParseError(ClassifierError):
    """Raised when description tags in a manifest are unbalanced."""


class FunctionType(str, Enum):
    PREPROCESSING = "preprocessing"
    LOCALIZATION = "localization"
    MAPPING = "mapping"
    RECOGNITION = "recognition"
    PATH_PLANNING = "path_planning"
    GOAL_PLANNER = "goal_planner"
    PATH_TRACKING = "path_tracking"
    TELEOPERATION = "teleoperation"
    SPEECH_GENERATION = "speech_generation"
    SWITCHER = "switcher"
    MOBILE = "mobile"
    MANIPULATOR = "manipulator"
    SPEAKER = "speaker"
    SENSORS = "sensors"
    VISUALIZATION = "visualization"
    SUPPORT = "support"
    EXTENSION = "extension"
    UNKNOWN = "unknown"


class MatchSource(str, Enum):
    NAME = "name"
    MANIFEST = "manifest"
    README = "readme"
    NONE = "none"


DEFAULT_SOURCES: Tuple[MatchSource, ...] = (
    MatchSource.NAME,
    MatchSource.MANIFEST,
    MatchSource.README,
)


@dataclass(frozen=True)
class Rule:
    function_type: FunctionType
    priority: int
    patterns: Tuple[re.Pattern, ...]

    def matches(self, text: str) -> bool:
        return any(p.search(text) for p in self.patterns)


@dataclass
class RuleSet:
    rules: List[Rule]

    def __post_init__(self):
        # Explicit priorities make file order irrelevant.
        self.rules = sorted(self.rules, key=lambda r: (r.priority, r.function_type.value))
        seen = [r.priority for r in self.rules]
        if len(set(seen)) != len(seen):
            raise ClassifierError("rule priorities must be distinct")

    def match(self, text: str) -> Optional[FunctionType]:
        if not text:
            return None
        for rule in self.rules:
            if rule.matches(text):
                return rule.function_type
        return None

    @classmethod
    def from_dict(cls, doc: Dict) -> "RuleSet":
        rules = []
        for entry in doc["rules"]:
            rules.append(
                Rule(
                    function_type=FunctionType(entry["type"]),
                    priority=int(entry["priority"]),
                    patterns=tuple(
                        re.compile(p, re.IGNORECASE) for p in entry["patterns"]
                    ),
                )
            )
        return cls(rules=rules)

    @classmethod
    def load(cls, path: Optional[str] = None) -> "RuleSet":
        if path is None:
            text = resources.files(__package__).joinpath("rules.json").read_text("utf-8")
        else:
            text = Path(path).read_text("utf-8")
        return cls.from_dict(json.loads(text))


@dataclass
class RepoRecord:
    name: str
    manifest_text: str = ""
    readme_text: str = ""


@dataclass
class KeyInfo:
    name: str
    manifest: str
    readme: str


@dataclass
class Classification:
    name: str
    function_type: FunctionType
    matched_via: MatchSource

    def to_row(self) -> Tuple[str, str, str]:
        return (self.name, self.function_type.value, self.matched_via.value)


_DESCRIPTION_RE = re.compile(r"<description>(.*?)</description>", re.DOTALL | re.IGNORECASE)
_HEADING_RE = re.compile(r"^\s*(?:#{1,6}\s+|\d+\.\s+)(?P<title>.+?)\s*$")
_SKIP_SECTIONS = ("requirement", "installation", "install", "setup", "dependencies")


def extract_manifest_description(manifest_text: str) -> str:
    """Pull the description element out of a manifest; tags must balance."""
    opens = len(re.findall(r"<description\b", manifest_text, re.IGNORECASE))
    closes = len(re.findall(r"</description>", manifest_text, re.IGNORECASE))
    if opens != closes:
        raise ManifestParseError(f"{opens} opening vs {closes} closing description tags")
    match = _DESCRIPTION_RE.search(manifest_text)
    if not match:
        return ""
    return " ".join(match.group(1).split())


def filter_readme(readme_text: str) -> str:
    """Drop code blocks, command lines, and install/requirements sections."""
    kept: List[str] = []
    in_fence = False
    skipping_section = False
    for line in readme_text.splitlines():
        stripped = line.strip()
        if stripped.startswith("```"):
            in_fence = not in_fence
            continue
        if in_fence:
            continue
        heading = _HEADING_RE.match(line)
        if heading:
            title = heading.group("title").lower()
            skipping_section = any(title.startswith(word) for word in _SKIP_SECTIONS)
            continue
        if skipping_section:
            continue
        if stripped.startswith("$"):
            continue
        if line.startswith("    ") or line.startswith("\t"):
            continue
        if stripped:
            kept.append(stripped)
    return " ".join(kept)


def extract_key_info(record: RepoRecord) -> KeyInfo:
    return KeyInfo(
        name=record.name.strip(),
        manifest=extract_manifest_description(record.manifest_text),
        readme=filter_readme(record.readme_text),
    )


def classify(
    record: RepoRecord,
    rules: Optional[RuleSet] = None,
    sources: Sequence[MatchSource] = DEFAULT_SOURCES,
) -> Classification:
    """First attribute (in precedence order) with any rule hit decides the type."""
    rules = rules or RuleSet.load()
    info = extract_key_info(record)
    texts = {
        MatchSource.NAME: info.name,
        MatchSource.MANIFEST: info.manifest,
        MatchSource.README: info.readme,
    }
    for source in sources:
        hit = rules.match(texts[source])
        if hit is not None:
            return Classification(record.name, hit, source)
    return Classification(record.name, FunctionType.UNKNOWN, MatchSource.NONE)


def load_corpus(corpus_dir: str) -> List[RepoRecord]:
    """One subdirectory per repo: name.txt, package.xml, README.md (all optional but name)."""
    records = []
    root = Path(corpus_dir)
    for entry in sorted(root.iterdir()):
        if not entry.is_dir():
            continue
        name_file = entry / "name.txt"
        name = name_file.read_text("utf-8").strip() if name_file.exists() else entry.name
        manifest = (entry / "package.xml")
        readme = (entry / "README.md")
        records.append(
            RepoRecord(
                name=name,
                manifest_text=manifest.read_text("utf-8") if manifest.exists() else "",
                readme_text=readme.read_text("utf-8") if readme.exists() else "",
            )
        )
    return records


def load_labels(corpus_dir: str) -> Dict[str, FunctionType]:
    path = Path(corpus_dir) / "labels.csv"
    labels: Dict[str, FunctionType] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            labels[row["name"]] = FunctionType(row["type"])
    return labels


def classify_corpus(corpus_dir: str, rules: Optional[RuleSet] = None) -> List[Classification]:
    rules = rules or RuleSet.load()
    return [classify(record, rules) for record in load_corpus(corpus_dir)]


def write_results_csv(results: Iterable[Classification], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "type", "matched_via"])
        for result in results:
            writer.writerow(result.to_row())


def agreement_rate(results: Sequence[Classification], labels: Dict[str, FunctionType]) -> float:
    """Share of records classified automatically (non-unknown) and agreeing with labels."""
    if not results:
        return 0.0
    good = sum(
        1
        for r in results
        if r.function_type != FunctionType.UNKNOWN and labels.get(r.name) == r.function_type
    )
    return good / len(results)
