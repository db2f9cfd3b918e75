"""Input checks shared by the estimators and the CLI."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

from .errors import MalformedDocument


def check_document(doc) -> str:
    """Accept SVG text, bytes, or a path to an ``.svg`` file and return the text."""
    if isinstance(doc, bytes):
        return doc.decode("utf-8")
    if isinstance(doc, Path):
        return doc.read_text()
    if isinstance(doc, str):
        if doc.lstrip().startswith("<"):
            return doc
        p = Path(doc)
        if p.suffix.lower() == ".svg" and p.is_file():
            return p.read_text()
        return doc
    raise MalformedDocument(f"expected SVG text, bytes or path, got {type(doc).__name__}")


def check_documents(X: Iterable) -> list[str]:
    if isinstance(X, (str, bytes, Path)):
        raise ValueError("expected a sequence of documents, got a single document")
    docs = [check_document(d) for d in X]
    if not docs:
        raise ValueError("need at least one document")
    return docs
