import pathlib
import re

ROOT = pathlib.Path(__file__).resolve().parent.parent
IMPORT_NAMES = {"python-dotenv": "dotenv", "scikit-learn": "sklearn"}
SOURCE_DIRS = ("config", "core", "data", "experiments", "utils", "tests")


def _pinned_packages():
    lines = (ROOT / "requirements.txt").read_text().splitlines()
    return [re.split(r"[=~<>!]", line, maxsplit=1)[0].strip() for line in lines if line.strip()]


def _source_text():
    files = [ROOT / "main.py"] + [p for d in SOURCE_DIRS for p in (ROOT / d).rglob("*.py")]
    return "\n".join(p.read_text(encoding="utf-8") for p in files)


def test_every_pinned_package_is_imported():
    source = _source_text()
    for package in _pinned_packages():
        module = IMPORT_NAMES.get(package, package)
        assert re.search(rf"^\s*(import|from) {module}\b", source, re.MULTILINE), f"{package} is never imported"
