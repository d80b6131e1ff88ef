#!/usr/bin/env python3
"""Generate the checked-in synthetic taxonomy benchmark.

Deterministic construction: a rooted tree with level sizes chosen so the node
count is exactly 1182 and the transitive closure (= sum of node depths) is
exactly 6542. Parents are assigned round-robin from the previous level, nodes
are numbered breadth-first, and labels are neutral taxon ids.

Usage: python3 scripts/make_taxonomy.py > data/taxonomy_1182.tsv
"""

LEVEL_SIZES = [1, 3, 9, 27, 81, 350, 611, 100]  # sum = 1182, sum(l * s_l) = 6542


def main() -> None:
    assert sum(LEVEL_SIZES) == 1182
    assert sum(level * size for level, size in enumerate(LEVEL_SIZES)) == 6542

    label = lambda i: f"taxon_{i:04d}"
    edges = []
    level_start, next_id = 0, 1
    for level in range(len(LEVEL_SIZES) - 1):
        parents = list(range(level_start, level_start + LEVEL_SIZES[level]))
        for child_idx in range(LEVEL_SIZES[level + 1]):
            parent = parents[child_idx % len(parents)]
            edges.append((parent, next_id))
            next_id += 1
        level_start += LEVEL_SIZES[level]

    # independent closure count check: depth of each node via parent pointers
    parent_of = {c: p for p, c in edges}
    total_ancestors = 0
    for node in range(1182):
        depth, cur = 0, node
        while cur in parent_of:
            cur = parent_of[cur]
            depth += 1
        total_ancestors += depth
    assert total_ancestors == 6542, total_ancestors
    assert len(edges) == 1181

    for p, c in edges:
        print(f"{label(p)}\t{label(c)}")


if __name__ == "__main__":
    main()
