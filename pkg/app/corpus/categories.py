from __future__ import annotations

from pathlib import Path

from app.core.errors import ManifestNotFoundError
from app.corpus.schemas import WordCategoryList


def read_category_words(path: Path) -> set[str]:
    """Lowercased words of a one-word-per-line UTF-8 file; may be empty."""
    if not path.is_file():
        raise ManifestNotFoundError(f"category file not found: {path}")
    return {line.strip().lower() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()}


def read_category_list(path: Path) -> WordCategoryList:
    return WordCategoryList(path.stem, frozenset(read_category_words(path)))


def load_category_dir(directory: Path) -> list[WordCategoryList]:
    if not directory.is_dir():
        raise ManifestNotFoundError(f"category directory not found: {directory}")
    return [read_category_list(p) for p in sorted(directory.glob("*.txt"))]


def write_category_list(category: WordCategoryList, directory: Path) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{category.name}.txt"
    path.write_text("".join(f"{w}\n" for w in sorted(category.words)), encoding="utf-8")
    return path
