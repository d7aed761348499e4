"""Tree traversal: probe every leaf once, cache-first, failures recorded."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..errors import ProbeFailure
from .cache import ProbeCache, content_hash
from .probes import ProbeResult, probe_leaf
from .tree import FileTree


@dataclass
class ProbeRun:
    results: dict[str, ProbeResult] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)
    leaf_digests: dict[str, str] = field(default_factory=dict)
    labels: dict[str, str] = field(default_factory=dict)
    executed: int = 0               # probes actually run (cache misses)
    cache_hits: int = 0
    cache_misses: int = 0

    def dataset_digest(self) -> str:
        """Digest of the whole tree: leaf paths paired with content digests."""
        import hashlib
        h = hashlib.sha256()
        for leaf in sorted(self.leaf_digests):
            h.update(leaf.encode("utf-8"))
            h.update(b"\x00")
            h.update(self.leaf_digests[leaf].encode("ascii"))
            h.update(b"\x00")
        return h.hexdigest()


def probe_tree(tree: FileTree, registry=None, cache: ProbeCache | None = None,
               max_workers: int = 1) -> ProbeRun:
    """Probe every leaf exactly once in depth-first order.

    The cache is consulted by content digest before any probe runs.  Leaf
    failures are recorded and never abort the traversal.  With
    max_workers > 1 probes run concurrently; assembly stays in leaf order
    so the output is identical either way (hit/miss counters are only
    exact in sequential runs).
    """
    cache = cache if cache is not None else ProbeCache()
    run = ProbeRun()
    leaves = tree.leaves()
    run.labels = {leaf: tree.labels.get(leaf, "unknown") for leaf in leaves}

    def visit(leaf: str) -> tuple[str, str | None, ProbeResult | None, str | None, bool]:
        """-> (leaf, digest, result, failure, executed)"""
        try:
            data = tree.absolute(leaf).read_bytes()
        except OSError as exc:
            return leaf, None, None, f"unreadable: {exc}", False
        digest = content_hash(data)
        entry = cache.lookup(digest)
        if entry is not None:
            decoded = ProbeCache.decode(entry)
            if decoded is not None:
                return leaf, digest, decoded, None, False
            return leaf, digest, None, entry.get("failure", "cached failure"), False
        try:
            result = probe_leaf(data, run.labels[leaf])
        except ProbeFailure as exc:
            cache.store_failure(digest, str(exc))
            return leaf, digest, None, str(exc), True
        cache.store_result(digest, result)
        return leaf, digest, result, None, True

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outcomes = list(pool.map(visit, leaves))
    else:
        outcomes = [visit(leaf) for leaf in leaves]

    for leaf, digest, result, failure, executed in outcomes:
        if digest is not None:
            run.leaf_digests[leaf] = digest
        if result is not None:
            run.results[leaf] = result
        if failure is not None:
            run.failures[leaf] = failure
        if executed:
            run.executed += 1
    run.cache_hits = cache.hits
    run.cache_misses = cache.misses
    return run


def probe_document(tree: FileTree, run: ProbeRun) -> dict:
    """Serializable per-leaf probe report (the CLI `probe` output)."""
    return {
        "version": "probe.v1",
        "root": str(tree.root),
        "dataset_digest": run.dataset_digest(),
        "leaves": {
            leaf: {
                "format": run.labels.get(leaf, "unknown"),
                "digest": run.leaf_digests.get(leaf),
                "schema": run.results[leaf].schema.to_dict() if leaf in run.results else None,
                "stats": run.results[leaf].stats.to_dict() if leaf in run.results else None,
                "failure": run.failures.get(leaf),
            }
            for leaf in tree.leaves()
        },
        "skipped": [list(s) for s in tree.skipped],
        "errors": [list(e) for e in tree.errors],
        "cache": {"hits": run.cache_hits, "misses": run.cache_misses},
    }
