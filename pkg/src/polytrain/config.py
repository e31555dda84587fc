"""Human-editable JSON configuration documents.

One document carries everything a run needs: a "session" section (the
engine schedule, geometry, trainer and scoring constants) and either a
single "subject" section or a "subjects" list for batch simulation.
Unknown keys anywhere are rejected rather than ignored, so a typo never
silently falls back to a default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .session import SessionConfig, config_from_dict, config_to_dict
from .subject import SubjectParams, params_from_dict, params_to_dict


class ConfigError(ValueError):
    """Configuration document is invalid."""


@dataclass(frozen=True)
class ConfigDocument:
    session: SessionConfig
    subject: SubjectParams | None = None
    subjects: list[tuple[str, SubjectParams]] = field(default_factory=list)

    def batch_entries(self) -> list[tuple[SessionConfig, SubjectParams, str]]:
        """Entries for run_batch; a lone subject becomes a batch of one."""
        if self.subjects:
            return [(self.session, params, label) for label, params in self.subjects]
        if self.subject is not None:
            return [(self.session, self.subject, "sim-001")]
        return [(self.session, SubjectParams(), "sim-001")]


def default_document() -> dict:
    return {
        "session": config_to_dict(SessionConfig()),
        "subject": params_to_dict(SubjectParams()),
    }


def parse_document(data: dict) -> ConfigDocument:
    if not isinstance(data, dict):
        raise ConfigError("config document must be a JSON object")
    unknown = set(data) - {"session", "subject", "subjects"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    try:
        session = config_from_dict(data.get("session", {}))
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"bad session section: {exc}") from exc

    subject = None
    if "subject" in data:
        try:
            subject = params_from_dict(data["subject"])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad subject section: {exc}") from exc

    subjects: list[tuple[str, SubjectParams]] = []
    if "subjects" in data:
        entries = data["subjects"]
        if not isinstance(entries, list):
            raise ConfigError("subjects must be a list")
        for i, entry in enumerate(entries):
            if not isinstance(entry, dict):
                raise ConfigError(f"subjects[{i}] must be an object")
            label = str(entry.get("label", f"sim-{i + 1:03d}"))
            try:
                subjects.append((label, params_from_dict(entry)))
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"bad subjects[{i}]: {exc}") from exc
        labels = [label for label, _ in subjects]
        if len(set(labels)) != len(labels):
            raise ConfigError("duplicate subject labels in batch")
    return ConfigDocument(session=session, subject=subject, subjects=subjects)


def load_config(path: str | Path) -> ConfigDocument:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_document(data)
