import json
import logging

from errors import DatasetError
from models.core import Episode

logger = logging.getLogger(__name__)


def load_dataset(path):
    """Load episodes from a JSONL file, one Episode object per line.

    Blank lines are skipped. Order is preserved. Any malformed line or a
    repeated episode id raises DatasetError carrying the 1-based line number.
    """
    episodes = []
    seen_ids = {}
    with open(path, encoding='utf-8') as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetError(f"invalid JSON ({e.msg})", line_number) from e
            if not isinstance(data, dict):
                raise DatasetError("expected a JSON object", line_number)

            try:
                episode = Episode.from_dict(data)
            except (KeyError, TypeError, ValueError) as e:
                raise DatasetError(f"invalid episode: {e}", line_number) from e

            if episode.id in seen_ids:
                raise DatasetError(
                    f"duplicate episode id '{episode.id}' (first seen on line {seen_ids[episode.id]})",
                    line_number,
                )
            seen_ids[episode.id] = line_number
            episodes.append(episode)

    logger.info(f"Loaded {len(episodes)} episodes from {path}")
    return episodes


def dump_dataset(episodes, path):
    with open(path, 'w', encoding='utf-8') as handle:
        for episode in episodes:
            handle.write(json.dumps(episode.to_dict(), ensure_ascii=False, sort_keys=True))
            handle.write('\n')
