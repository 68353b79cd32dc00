#!/usr/bin/env python3
"""
Run Log for zeta-dist

Appends one JSON line per CLI run (timestamp, session, command, resolved
configuration, result summary) and shows recent runs.

Usage:
    # Log runs from the main CLI
    zeta-dist witness --catalog L1 --sigma 2 --run-log runs.jsonl

    # Show the last runs
    zd-run-log runs.jsonl --tail 5

    # Only one command
    zd-run-log runs.jsonl --command witness

Part of: zeta-dist
"""

import argparse
import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)


def log_run(
    log_file: Path,
    command: str,
    config: Dict[str, Any],
    summary: Dict[str, Any],
    exit_code: int,
) -> Dict[str, Any]:
    """Append one run entry to a JSONL log and return it."""
    log_file.parent.mkdir(parents=True, exist_ok=True)
    now = datetime.now()
    entry = {
        "timestamp": now.isoformat(),
        "session_id": f"s{now.strftime('%Y%m%d')}",
        "command": command,
        "config": config,
        "summary": summary,
        "exit_code": exit_code,
    }

    # Append to log (never overwrite)
    with open(log_file, "a") as f:
        f.write(json.dumps(entry) + "\n")
    logger.info("run logged to %s", log_file)
    return entry


def load_runs(log_file: Path) -> List[Dict[str, Any]]:
    """Read a run log; unreadable lines are skipped with a warning."""
    if not log_file.exists():
        return []
    entries = []
    for number, line in enumerate(log_file.read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            entries.append(json.loads(line))
        except json.JSONDecodeError:
            logger.warning("%s:%d is not valid JSON, skipped", log_file, number)
    return entries


def format_runs(entries: List[Dict[str, Any]]) -> str:
    lines = [f"{'=' * 60}", f"📋 {len(entries)} run(s)", f"{'=' * 60}"]
    for entry in entries:
        mark = "✅" if entry.get("exit_code") == 0 else "❌"
        config = entry.get("config", {})
        source = config.get("catalog") or config.get("spec") or "-"
        lines.append(
            f"{mark} {entry.get('timestamp', '?')}  {entry.get('command', '?'):<9} "
            f"{source}  exit={entry.get('exit_code')}"
        )
    return "\n".join(lines)


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        description="Show runs recorded by zeta-dist --run-log",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
    # All runs
    zd-run-log runs.jsonl

    # Last five witness searches
    zd-run-log runs.jsonl --command witness --tail 5

    # Raw JSON lines
    zd-run-log runs.jsonl --json

Part of: zeta-dist
        """,
    )
    parser.add_argument("log", type=Path, help="Run log (JSONL)")
    parser.add_argument("--command", help="Only runs of this subcommand")
    parser.add_argument("--tail", type=int, default=0, help="Only the last N runs")
    parser.add_argument("--json", action="store_true", help="Print entries as JSON lines")
    args = parser.parse_args(argv)

    entries = load_runs(args.log)
    if args.command:
        entries = [e for e in entries if e.get("command") == args.command]
    if args.tail > 0:
        entries = entries[-args.tail:]

    if not entries:
        print(f"No runs found in {args.log}")
        return 0
    if args.json:
        for entry in entries:
            print(json.dumps(entry))
    else:
        print(format_runs(entries))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
