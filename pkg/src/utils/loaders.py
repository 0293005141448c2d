"""
Loaders for scenario files, price files, spot trace CSVs and dataset manifests

Every loader reports failures as ScenarioLoadError naming the file and, when
known, the line.
"""

import csv
import logging
import os
import re
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from dotenv import dotenv_values
from pydantic import ValidationError

from src.core.market import SpotTrace
from src.core.storagesim import TIER_ALIASES, DataObject, Tier
from src.models.errors import ConfigurationError, ScenarioLoadError
from src.models.job import QueueName
from src.models.scenario import PriceSettings, Scenario, default_rbac_settings

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["timestamp", "region", "az", "instance_type", "price_usd_per_hour"]
MANIFEST_COLUMNS = ["object_id", "size_gb", "initial_tier", "owner_role"]

_SECTION = re.compile(r"^\[([A-Za-z0-9_.\-]+)\]$")

# top-level keys naming other files, and the scenario field that holds the resolved path
FILE_KEYS = {"price_file": None, "spot_trace": "spot_trace_path", "dataset_manifest": "dataset_manifest_path"}
PLAIN_SECTIONS = ("workload", "jobs", "throughput", "storage", "lifecycle", "provisioning")
KEY_ALIASES = {"bid_kind": ("bid", "kind"), "bid_value": ("bid", "value")}

Path = Tuple[Any, ...]


@dataclass
class ScenarioText:
    """A scenario file after line parsing, before validation"""
    path: str
    data: Dict[str, Any] = field(default_factory=dict)
    lines: Dict[Path, int] = field(default_factory=dict)
    files: Dict[str, Tuple[str, int]] = field(default_factory=dict)

    def put(self, path: Path, value: Any, line: int) -> None:
        if path in self.lines:
            raise ScenarioLoadError(
                self.path, f"duplicate key '{'.'.join(map(str, path))}' (first set on line {self.lines[path]})", line
            )
        node = self.data
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ScenarioLoadError(self.path, f"key '{'.'.join(map(str, path))}' conflicts with a value", line)
        node[path[-1]] = value
        self.lines[path] = line

    def line_for(self, loc: Sequence[Any]) -> Optional[int]:
        """Line of the longest recorded prefix of a validation error location"""
        loc = tuple(loc)
        for end in range(len(loc), 0, -1):
            line = self.lines.get(loc[:end])
            if line is not None:
                return line
        return None


def _strip_comment(raw: str) -> str:
    stripped = raw.strip()
    if not stripped or stripped[0] in "#;":
        return ""
    return stripped.split(" #", 1)[0].rstrip()


def _parse_rbac_entry(text: ScenarioText, key: str, value: str, line: int) -> bool:
    """Handle role.<name> and allow.<role> keys; False for ordinary keys"""
    data = text.data.setdefault("rbac", {})
    if key.startswith("role."):
        name = key[len("role."):]
        parts = [part.strip() for part in value.split(",") if part.strip()]
        if not name or not parts:
            raise ScenarioLoadError(text.path, "expected 'role.<name> = user|internal[, trusted-switcher]'", line)
        flags = parts[1:]
        unknown = [flag for flag in flags if flag != "trusted-switcher"]
        if unknown:
            raise ScenarioLoadError(text.path, f"unknown role flag '{unknown[0]}'", line)
        roles = data.setdefault("roles", [])
        text.lines[("rbac", "roles", len(roles))] = line
        roles.append({"name": name, "kind": parts[0], "trusted_switcher": bool(flags)})
        return True
    if key.startswith("allow."):
        role = key[len("allow."):]
        grants = data.setdefault("grants", [])
        for clause in value.split(";"):
            clause = clause.strip()
            if not clause:
                continue
            resource, sep, actions = clause.rpartition(":")
            if not sep or not resource or not actions:
                raise ScenarioLoadError(text.path, f"expected '<resource>:<action>[+<action>]', got '{clause}'", line)
            text.lines[("rbac", "grants", len(grants))] = line
            grants.append(
                {
                    "role": role,
                    "resource": resource.strip(),
                    "actions": [a.strip() for a in actions.split("+") if a.strip()],
                }
            )
        return True
    return False


def read_scenario_text(path: str) -> ScenarioText:
    """
    Parse the line structure of a scenario file

    Raises:
        ScenarioLoadError: Unreadable file, malformed line, unknown section or duplicate key
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw_lines = f.read().splitlines()
    except OSError as e:
        raise ScenarioLoadError(path, f"cannot read scenario file: {e.strerror or e}")

    text = ScenarioText(path=path)
    section: Optional[str] = None
    prefix: Path = ()
    seen_sections: Dict[str, int] = {}
    for number, raw in enumerate(raw_lines, 1):
        line = _strip_comment(raw)
        if not line:
            continue
        header = _SECTION.match(line)
        if header:
            section = header.group(1)
            if section in seen_sections:
                raise ScenarioLoadError(path, f"section [{section}] repeated (first on line {seen_sections[section]})", number)
            seen_sections[section] = number
            if section in PLAIN_SECTIONS or section == "rbac":
                prefix = (section,)
            elif section == "scaling" or section.startswith("scaling."):
                queue = section.partition(".")[2] or QueueName.PRODUCTION.value
                if queue not in {q.value for q in QueueName}:
                    raise ScenarioLoadError(path, f"unknown queue '{queue}' in section [{section}]", number)
                prefix = ("pools", queue)
                text.put(prefix + ("pool",), queue, number)
            else:
                raise ScenarioLoadError(path, f"unknown section [{section}]", number)
            text.lines.setdefault(prefix, number)
            continue

        key, sep, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not sep or not key:
            raise ScenarioLoadError(path, f"expected 'key = value', got '{line}'", number)

        if section is None:
            if key in FILE_KEYS:
                text.files[key] = (value, number)
            else:
                text.put((key,), value, number)
            continue
        if section == "rbac" and _parse_rbac_entry(text, key, value, number):
            continue
        subpath = KEY_ALIASES.get(key, tuple(key.split(".")))
        text.put(prefix + subpath, value, number)
    return text


def _resolve(base_dir: str, value: str) -> str:
    return value if os.path.isabs(value) else os.path.normpath(os.path.join(base_dir, value))


def load_scenario(path: str) -> Scenario:
    """
    Load and validate a scenario file together with its price file

    Referenced trace and manifest files must exist; they are parsed when the
    run is prepared.

    Raises:
        ScenarioLoadError: Any problem, naming the file and line
    """
    text = read_scenario_text(path)
    base_dir = os.path.dirname(os.path.abspath(path))
    text.data.setdefault("name", os.path.splitext(os.path.basename(path))[0])
    text.data["source_path"] = path

    if "price_file" not in text.files:
        raise ScenarioLoadError(path, "missing required key 'price_file'")
    for key, (value, number) in text.files.items():
        resolved = _resolve(base_dir, value)
        if not os.path.isfile(resolved):
            raise ScenarioLoadError(path, f"{key}: file not found: {resolved}", number)
        if key == "price_file":
            text.data["prices"] = load_price_file(resolved)
        else:
            text.data[FILE_KEYS[key]] = resolved

    rbac = text.data.get("rbac")
    if rbac is not None and "roles" not in rbac:
        defaults = default_rbac_settings()
        rbac["roles"] = [role.model_dump() for role in defaults.roles]
        rbac.setdefault("grants", [grant.model_dump() for grant in defaults.grants])

    try:
        scenario = Scenario.model_validate(text.data)
    except ValidationError as e:
        error = e.errors()[0]
        loc = error["loc"]
        where = ".".join(str(part) for part in loc) or "scenario"
        raise ScenarioLoadError(path, f"{where}: {error['msg']}", text.line_for(loc))
    logger.info(f"Loaded scenario '{scenario.name}' ({scenario.experiment.value}) from {path}")
    return scenario


def _key_lines(path: str) -> Dict[str, int]:
    lines = {}
    with open(path, "r", encoding="utf-8") as f:
        for number, raw in enumerate(f, 1):
            stripped = raw.strip()
            if not stripped or stripped.startswith("#") or "=" not in stripped:
                continue
            key = stripped.split("=", 1)[0].strip()
            if key.startswith("export "):
                key = key[len("export "):].strip()
            lines.setdefault(key, number)
    return lines


def load_price_file(path: str) -> PriceSettings:
    """
    Read a dotenv-format price file

    Keys are dotted paths into PriceSettings; the first dot separates the
    group from the member, so 'on_demand_usd_per_hour.m4.xlarge' prices the
    'm4.xlarge' instance type.

    Raises:
        ScenarioLoadError: Missing file, key without value, unknown key or bad value
    """
    if not os.path.isfile(path):
        raise ScenarioLoadError(path, "price file not found")
    lines = _key_lines(path)
    data: Dict[str, Any] = {}
    for key, value in dotenv_values(path).items():
        if value is None:
            raise ScenarioLoadError(path, f"key '{key}' has no value", lines.get(key))
        group, _, member = key.partition(".")
        if member:
            bucket = data.setdefault(group, {})
            if not isinstance(bucket, dict):
                raise ScenarioLoadError(path, f"key '{key}' conflicts with '{group}'", lines.get(key))
            bucket[member] = value
        else:
            data[key] = value
    try:
        return PriceSettings.model_validate(data)
    except ValidationError as e:
        error = e.errors()[0]
        loc = [str(part) for part in error["loc"]]
        line = None
        for end in range(len(loc), 0, -1):
            key = ".".join(loc[:1] + [".".join(loc[1:end])]) if end > 1 else loc[0]
            if key in lines:
                line = lines[key]
                break
        raise ScenarioLoadError(path, f"{'.'.join(loc) or 'prices'}: {error['msg']}", line)


def read_spot_traces(path: str) -> List[SpotTrace]:
    """
    Read a spot trace CSV

    Returns:
        One trace per (region, az, instance_type), ordered by that key

    Raises:
        ScenarioLoadError: Wrong header, bad value or non-increasing timestamps
    """
    traces: Dict[Tuple[str, str, str], SpotTrace] = {}
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames != TRACE_COLUMNS:
                raise ScenarioLoadError(path, f"expected header {','.join(TRACE_COLUMNS)}", 1)
            for row in reader:
                try:
                    key = (row["region"], row["az"], row["instance_type"])
                    trace = traces.setdefault(key, SpotTrace(*key))
                    trace.add_point(int(row["timestamp"]), float(row["price_usd_per_hour"]))
                except (TypeError, ValueError) as e:
                    raise ScenarioLoadError(path, str(e), reader.line_num)
    except OSError as e:
        raise ScenarioLoadError(path, f"cannot read trace file: {e.strerror or e}")
    if not traces:
        raise ScenarioLoadError(path, "trace file has no rows")
    return [traces[key] for key in sorted(traces)]


def write_spot_traces(path: str, traces: Sequence[SpotTrace]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for trace in sorted(traces, key=lambda t: (t.region, t.az, t.instance_type)):
            for at, price in zip(trace.times, trace.prices):
                writer.writerow([at, trace.region, trace.az, trace.instance_type, price])


def read_manifest(path: str) -> List[DataObject]:
    """
    Read a dataset manifest CSV

    Raises:
        ScenarioLoadError: Wrong header, unknown tier, bad size or duplicate object
    """
    objects: List[DataObject] = []
    seen = set()
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames != MANIFEST_COLUMNS:
                raise ScenarioLoadError(path, f"expected header {','.join(MANIFEST_COLUMNS)}", 1)
            for row in reader:
                tier = TIER_ALIASES.get((row["initial_tier"] or "").upper())
                if tier is None:
                    raise ScenarioLoadError(path, f"unknown tier '{row['initial_tier']}'", reader.line_num)
                try:
                    size = float(row["size_gb"])
                except (TypeError, ValueError):
                    raise ScenarioLoadError(path, f"bad size_gb '{row['size_gb']}'", reader.line_num)
                if size < 0:
                    raise ScenarioLoadError(path, "size_gb must be non-negative", reader.line_num)
                if row["object_id"] in seen:
                    raise ScenarioLoadError(path, f"duplicate object '{row['object_id']}'", reader.line_num)
                seen.add(row["object_id"])
                objects.append(DataObject(row["object_id"], size, tier=tier, owner_role=row["owner_role"]))
    except OSError as e:
        raise ScenarioLoadError(path, f"cannot read manifest: {e.strerror or e}")
    return objects


def write_manifest(path: str, objects: Sequence[DataObject]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for obj in objects:
            if obj.tier is Tier.RETRIEVING:
                raise ConfigurationError(f"Cannot write {obj.object_id} while it is being retrieved")
            writer.writerow([obj.object_id, obj.size_gb, obj.tier.value, obj.owner_role])
