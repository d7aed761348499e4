"""Dataset tree scanning: a labelled file tree rooted at one directory."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ScanError
from .formats import UNKNOWN, FormatRegistry, builtin_registry

CACHE_DIR_NAME = ".probe-cache"
MAGIC_HEAD_BYTES = 16


@dataclass
class FileTree:
    root: Path
    children: dict[str, tuple[str, ...]] = field(default_factory=dict)  # dir -> ordered kids
    labels: dict[str, str] = field(default_factory=dict)                # leaf -> format id
    skipped: list[tuple[str, str]] = field(default_factory=list)        # (path, reason)
    errors: list[tuple[str, str]] = field(default_factory=list)

    def leaves(self) -> list[str]:
        """Leaf paths in depth-first lexicographic order."""
        out: list[str] = []

        def walk(node: str):
            for child in self.children.get(node, ()):
                if child in self.children:
                    walk(child)
                else:
                    out.append(child)

        walk("")
        return out

    def directories(self) -> list[str]:
        return sorted(self.children)

    def absolute(self, rel: str) -> Path:
        return self.root / rel


def scan_tree(root, registry: FormatRegistry | None = None) -> FileTree:
    """Walk a dataset directory into a labelled tree.

    Children are visited in lexicographic order so leaf order is a pure
    function of the tree.  Symlinks that escape the root are rejected and
    recorded; the probe cache directory is excluded (it is ours).
    """
    registry = registry or builtin_registry()
    root = Path(root)
    if not root.exists():
        raise ScanError("root does not exist", str(root))
    if not root.is_dir():
        raise ScanError("root is not a directory", str(root))
    resolved_root = root.resolve()
    tree = FileTree(root=root)

    def record_dir(rel: str, absolute: Path):
        try:
            entries = sorted(os.scandir(absolute), key=lambda e: e.name)
        except OSError as exc:
            tree.errors.append((rel, f"unreadable directory: {exc}"))
            tree.children[rel] = ()
            return
        kids: list[str] = []
        for entry in entries:
            child_rel = f"{rel}/{entry.name}" if rel else entry.name
            child_abs = absolute / entry.name
            if entry.name == CACHE_DIR_NAME:
                tree.skipped.append((child_rel, "probe cache directory"))
                continue
            if entry.is_symlink():
                target = child_abs.resolve()
                if not target.is_relative_to(resolved_root):
                    tree.skipped.append((child_rel, f"symlink escapes root: {target}"))
                    continue
            if entry.is_dir(follow_symlinks=True):
                kids.append(child_rel)
                record_dir(child_rel, child_abs)
            elif entry.is_file(follow_symlinks=True):
                kids.append(child_rel)
                tree.labels[child_rel] = _label(child_abs, child_rel, registry, tree)
            else:
                tree.skipped.append((child_rel, "not a regular file or directory"))
        tree.children[rel] = tuple(kids)

    record_dir("", root)
    return tree


def _label(absolute: Path, rel: str, registry: FormatRegistry, tree: FileTree) -> str:
    try:
        with open(absolute, "rb") as fh:
            head = fh.read(MAGIC_HEAD_BYTES)
    except OSError as exc:
        tree.errors.append((rel, f"unreadable: {exc}"))
        return UNKNOWN
    return registry.detect(absolute.name, head)
