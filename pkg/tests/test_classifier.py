from __future__ import annotations

import json
import random

import pytest

from interlock.classifier import (
    Classification,
    FunctionType,
    ManifestParseError,
    MatchSource,
    RepoRecord,
    RuleSet,
    agreement_rate,
    classify,
    classify_corpus,
    extract_key_info,
    extract_manifest_description,
    filter_readme,
    load_corpus,
    load_labels,
    write_results_csv,
)

EXPLORATION_MANIFEST = """<?xml version="1.0"?>
<package format="2">
  <name>rrt_exploration</name>
  <description>A ROS package that implements a multi-robot
RRT-based map exploration algorithm. It also has the
image-based frontier detection that uses image processing
to extract frontier points</description>
</package>
"""

EXPLORATION_README = """It is a ROS package that implements a multi-robot map
exploration algorithm for mobile robots. It is based on
the Rapidly-Exploring Random Tree (RRT) algorithm.

1. Requirements
The package has been tested on both ROS Kinetic and ROS
Indigo, it should work on other distributions like Jade.

$ sudo apt-get install ros-kinetic-gmapping

2. Installation
Clone the package and build it.
"""


def test_manifest_description_extracted_across_lines():
    desc = extract_manifest_description(EXPLORATION_MANIFEST)
    assert desc.startswith("A ROS package that implements a multi-robot RRT-based map")
    assert "\n" not in desc


def test_manifest_without_description_is_empty():
    assert extract_manifest_description("<package><name>x</name></package>") == ""


def test_unbalanced_description_tags_raise():
    with pytest.raises(ManifestParseError):
        extract_manifest_description("<description>half open")


def test_readme_filtering():
    cleaned = filter_readme(EXPLORATION_README)
    assert "multi-robot map exploration algorithm" in cleaned
    assert "apt-get" not in cleaned
    assert "Kinetic" not in cleaned
    assert "Clone the package" not in cleaned


def test_readme_filtering_drops_fenced_and_indented_code():
    text = "Useful node for robots.\n```\nmake install\n```\n    rosrun pkg node\nMore prose."
    cleaned = filter_readme(text)
    assert "make install" not in cleaned
    assert "rosrun" not in cleaned
    assert "Useful node" in cleaned and "More prose." in cleaned


def test_markdown_headed_sections_also_skipped():
    text = "Intro line.\n## Installation\npip stuff here\n## Usage\nRun the node."
    cleaned = filter_readme(text)
    assert "pip stuff" not in cleaned
    assert "Run the node." in cleaned


def test_classify_exploration_record():
    record = RepoRecord(
        name="rrt_exploration",
        manifest_text=EXPLORATION_MANIFEST,
        readme_text=EXPLORATION_README,
    )
    result = classify(record)
    assert result.function_type == FunctionType.MAPPING
    assert result.matched_via in (MatchSource.MANIFEST, MatchSource.README)


def test_name_precedence_beats_manifest_and_readme():
    record = RepoRecord(
        name="joy_teleop",
        manifest_text="<description>Generates commands to grasp items.</description>",
        readme_text="A mapping and localization toolbox.",
    )
    result = classify(record)
    assert result.function_type == FunctionType.TELEOPERATION
    assert result.matched_via == MatchSource.NAME


def test_precedence_mutation_changes_answer():
    record = RepoRecord(
        name="joy_teleop",
        manifest_text="<description>Generates commands to grasp items.</description>",
        readme_text="A mapping and localization toolbox.",
    )
    flipped = classify(
        record,
        sources=(MatchSource.README, MatchSource.MANIFEST, MatchSource.NAME),
    )
    assert flipped.matched_via == MatchSource.README
    assert flipped.function_type != FunctionType.TELEOPERATION


def test_priority_breaks_ties_within_one_field():
    # "slam_gmapping_tools" hits both localization (40) and mapping (50); the
    # lower priority index must win.
    record = RepoRecord(name="slam_gmapping_tools")
    assert classify(record).function_type == FunctionType.LOCALIZATION


def test_rule_table_order_is_irrelevant(fixtures_dir):
    doc = json.loads(
        (fixtures_dir.parent / "src/interlock/classifier/rules.json").read_text()
    )
    rng = random.Random(3)
    baseline = [r.to_row() for r in classify_corpus(str(fixtures_dir / "corpus"))]
    for _ in range(3):
        shuffled = json.loads(json.dumps(doc))
        rng.shuffle(shuffled["rules"])
        rules = RuleSet.from_dict(shuffled)
        rows = [r.to_row() for r in classify_corpus(str(fixtures_dir / "corpus"), rules)]
        assert rows == baseline


def test_corpus_agreement(fixtures_dir):
    corpus = str(fixtures_dir / "corpus")
    results = classify_corpus(corpus)
    labels = load_labels(corpus)
    assert len(results) >= 30
    rate = agreement_rate(results, labels)
    assert rate >= 0.9
    for result in results:
        if result.function_type != FunctionType.UNKNOWN:
            assert result.function_type == labels[result.name], result.name


def test_unmatched_record_is_unknown():
    result = classify(RepoRecord(name="zzqx", manifest_text="", readme_text=""))
    assert result.function_type == FunctionType.UNKNOWN
    assert result.matched_via == MatchSource.NONE


def test_name_matching_case_insensitive():
    assert classify(RepoRecord(name="JOY_TELEOP")).function_type == FunctionType.TELEOPERATION


def test_corpus_loader_uses_directory_name_fallback(fixtures_dir):
    records = {r.name for r in load_corpus(str(fixtures_dir / "corpus"))}
    assert "navfn" in records
    assert "misc_ros_files" in records


def test_results_csv_round_trip(tmp_path, fixtures_dir):
    results = classify_corpus(str(fixtures_dir / "corpus"))
    out = tmp_path / "results.csv"
    write_results_csv(results, str(out))
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "name,type,matched_via"
    assert len(lines) == len(results) + 1
    write_results_csv(results, str(tmp_path / "again.csv"))
    assert (tmp_path / "again.csv").read_text() == out.read_text()


def test_distinct_priorities_enforced():
    doc = {
        "rules": [
            {"type": "mapping", "priority": 1, "patterns": ["map"]},
            {"type": "sensors", "priority": 1, "patterns": ["driver"]},
        ]
    }
    with pytest.raises(Exception):
        RuleSet.from_dict(doc)


def test_classification_dataclass_row():
    c = Classification("x", FunctionType.MOBILE, MatchSource.NAME)
    assert c.to_row() == ("x", "mobile", "name")
