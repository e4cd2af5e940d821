"""Bump the smoothgraph version in every file that records it."""
import argparse
import logging
import re
import sys
from pathlib import Path
from typing import Dict, List, Optional

logger = logging.getLogger("update_version")

INCREMENTS = ("major", "minor", "patch")

# file -> pattern whose single group is the version string
VERSION_PATTERNS: Dict[str, str] = {
    "pyproject.toml": r'^version = "([^"]+)"',
    "setup.py": r"version='([^']+)'",
    "setup.cfg": r"^version = (\S+)",
    "smoothgraph/__init__.py": r'^__version__ = "([^"]+)"',
}


def get_version_increment(current_version: str, increment_type: str) -> str:
    """Calculate new version based on increment type."""
    major, minor, patch = map(int, current_version.split('.'))

    if increment_type == 'major':
        return f"{major + 1}.0.0"
    elif increment_type == 'minor':
        return f"{major}.{minor + 1}.0"
    elif increment_type == 'patch':
        return f"{major}.{minor}.{patch + 1}"
    raise ValueError(f"Invalid version increment type: {increment_type!r}")


def read_version(file_path: Path, pattern: str) -> str:
    match = re.search(pattern, file_path.read_text(encoding="utf-8"), flags=re.MULTILINE)
    if match is None:
        raise ValueError(f"No version found in {file_path}")
    return match.group(1)


def write_version(file_path: Path, pattern: str, new_version: str) -> None:
    content = file_path.read_text(encoding="utf-8")
    match = re.search(pattern, content, flags=re.MULTILINE)
    start, end = match.span(1)
    file_path.write_text(content[:start] + new_version + content[end:], encoding="utf-8")
    logger.info(f"Updated {file_path}")


def update_version(root_dir: Path, increment_type: str, dry_run: bool = False) -> str:
    """
    Bump the version of the project rooted at ``root_dir``.

    All files must agree on the current version before anything is written.

    Returns:
        str: The new version.
    """
    if not root_dir.exists():
        raise FileNotFoundError(f"Directory not found: {root_dir}")

    files = {root_dir / name: pattern for name, pattern in VERSION_PATTERNS.items()}
    missing: List[Path] = [path for path in files if not path.exists()]
    if missing:
        raise FileNotFoundError(f"Files not found: {', '.join(map(str, missing))}")

    versions = {path: read_version(path, pattern) for path, pattern in files.items()}
    if len(set(versions.values())) != 1:
        listing = ", ".join(f"{path.name}={version}" for path, version in versions.items())
        raise ValueError(f"Version mismatch: {listing}")

    current_version = next(iter(versions.values()))
    new_version = get_version_increment(current_version, increment_type)
    logger.info(f"Current version: {current_version}")

    if not dry_run:
        for path, pattern in files.items():
            write_version(path, pattern, new_version)
    logger.info(f"Version {'would be' if dry_run else 'was'} updated: {current_version} -> {new_version}")
    return new_version


def cli(argv: Optional[List[str]] = None) -> int:
    """Command line interface for the version updater."""
    parser = argparse.ArgumentParser(
        description="Update version numbers across project files",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  update_version.py --type patch
  update_version.py --type minor --path /path/to/project
  update_version.py --type major --dry-run
        """
    )
    parser.add_argument('--type', '-t', choices=INCREMENTS, required=True, help='Type of version increment')
    parser.add_argument('--path', '-p', type=Path, default=Path.cwd(), help='Path to project root directory')
    parser.add_argument('--dry-run', action='store_true', help='Report the new version without writing files')
    parser.add_argument('--quiet', '-q', action='store_true', help='Suppress all non-error output')
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO, format="%(message)s")
    try:
        new_version = update_version(root_dir=args.path, increment_type=args.type, dry_run=args.dry_run)
    except (OSError, ValueError) as e:
        logger.error(f"Error: {e}")
        return 1
    if not args.quiet:
        print(new_version)
    return 0


if __name__ == "__main__":
    sys.exit(cli())
