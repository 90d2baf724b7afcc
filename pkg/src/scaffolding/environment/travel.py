"""Travel-log generator: a traveler random-walks a 9x9 town and narrates.

Walk rules: the next direction is drawn uniformly from the four; if it leaves
the grid or enters an already visited attraction, a new direction is drawn
uniformly among the legal ones.  No legal direction ends the log.  After
every move (and at the start) the traveler looks at the four neighbouring
cells and, if any holds an attraction, logs one of them at random.

The final question is chosen from world geometry restricted to attractions
the log mentions; ``oracle.py`` answers the same questions from the text
alone, which is the cross-check between the two code paths.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from ..lexicon import ATTRACTIONS, DIRECTIONS, OFFSETS

GRID = 9
SEPARATOR = "--"


class GenerationError(RuntimeError):
    pass


@dataclass
class TravelWorld:
    attractions: dict[tuple[int, int], str]
    start: tuple[int, int]
    seed: int
    size: int = GRID

    @property
    def labels(self) -> list[str]:
        return sorted(self.attractions.values(), key=ATTRACTIONS.index)

    def at(self, pos: tuple[int, int]) -> str | None:
        return self.attractions.get(pos)

    def on_grid(self, pos: tuple[int, int]) -> bool:
        return 0 <= pos[0] < self.size and 0 <= pos[1] < self.size

    def position(self, label: str) -> tuple[int, int]:
        for pos, name in self.attractions.items():
            if name == label:
                return pos
        raise KeyError(label)


@dataclass
class TravelLog:
    sentences: list[str]
    question: str
    answer: str
    seed: int = 0
    n_attractions: int = 0
    path: list[tuple[int, int]] = field(default_factory=list, repr=False)

    def __len__(self) -> int:
        return len(self.sentences)


def action_labels(n_attractions: int) -> list[str]:
    """The answer space of an n-attraction dataset."""
    return list(ATTRACTIONS[:n_attractions]) + list(DIRECTIONS)


def generate_world(n_attractions: int, seed: int, size: int = GRID) -> TravelWorld:
    if not 1 <= n_attractions <= size * size:
        raise ValueError(f"n_attractions must lie in [1, {size * size}], got {n_attractions}")
    rng = np.random.default_rng(seed)
    cells = rng.choice(size * size, size=n_attractions, replace=False)
    attractions = {(int(c) % size, int(c) // size): ATTRACTIONS[i] for i, c in enumerate(cells)}
    s = int(rng.integers(size * size))
    return TravelWorld(attractions, (s % size, s // size), seed, size)


def _step(pos, direction):
    dx, dy = OFFSETS[direction]
    return pos[0] + dx, pos[1] + dy


def _choose(rng: np.random.Generator, options):
    return options[int(rng.integers(len(options)))]


def walk(world: TravelWorld, rng: np.random.Generator, max_moves: int = 12):
    """Return (sentences, traveler path, logged attraction labels)."""
    pos = world.start
    visited: set[str] = set()
    logged: list[str] = []
    sentences: list[str] = []
    path = [pos]

    def mention(label):
        if label not in logged:
            logged.append(label)

    def observe():
        seen = [(d, world.at(_step(pos, d))) for d in DIRECTIONS if world.at(_step(pos, d))]
        if not seen:
            return
        direction, label = _choose(rng, seen)
        forms = [
            f"the {label} on my {direction}",
            f"the {label} is on my {direction}",
            f"i see a {label} on my {direction}",
        ]
        here = world.at(pos)
        if here is not None:
            forms += [
                f"the {label} on the {direction} of the {here}",
                f"the {label} is on the {direction} of the {here}",
            ]
        sentences.append(_choose(rng, forms))
        mention(label)

    here = world.at(pos)
    if here is not None:
        visited.add(here)
        sentences.append(f"i am at the {here}")
        mention(here)
    observe()
    for _ in range(max_moves):
        legal = [
            d for d in DIRECTIONS
            if world.on_grid(_step(pos, d)) and world.at(_step(pos, d)) not in visited
        ]
        if not legal:
            break
        direction = DIRECTIONS[int(rng.integers(4))]
        if direction not in legal:
            direction = _choose(rng, legal)
        previous = world.at(pos)
        pos = _step(pos, direction)
        path.append(pos)
        label = world.at(pos)
        if label is None:
            sentences.append(_choose(rng, [f"i am heading {direction}", f"i am heading to {direction}"]))
        else:
            visited.add(label)
            mention(label)
            form = int(rng.integers(3 if previous else 2))
            if form == 0:
                sentences.append(f"i am heading {direction} towards the {label}")
            elif form == 1:
                sentences += [f"i am heading {direction}", f"i reached the {label}"]
            else:
                sentences += [f"i am heading {direction}", f"after leaving the {previous} , i reached the {label}"]
        observe()
    return sentences, path, logged


def dominant_direction(src: tuple[int, int], dst: tuple[int, int]) -> str | None:
    """Direction of the larger displacement from ``src`` to ``dst``; None on ties."""
    dx, dy = dst[0] - src[0], dst[1] - src[1]
    if abs(dx) == abs(dy):
        return None
    if abs(dx) > abs(dy):
        return "east" if dx > 0 else "west"
    return "north" if dy > 0 else "south"


def final_candidates(world: TravelWorld, logged: list[str], end: tuple[int, int]) -> dict[str, list[tuple[str, str]]]:
    """Questions about each logged attraction, with gold answers from geometry.

    Adjacent pairs give "what is D of the Y ?", "what is the X D of ?" and
    "where is the X from the Y ?".  An attraction without a logged neighbour
    falls back to the larger-displacement direction from another logged
    attraction, then from the traveler's final position.
    """
    out: dict[str, list[tuple[str, str]]] = {}
    for x in logged:
        px = world.position(x)
        adjacent, coarse = [], []
        for y in logged:
            if y == x:
                continue
            py = world.position(y)
            for d in DIRECTIONS:
                if _step(py, d) == px:
                    adjacent += [
                        (f"what is {d} of the {y} ?", x),
                        (f"what is the {x} {d} of ?", y),
                        (f"where is the {x} from the {y} ?", d),
                    ]
            d = dominant_direction(py, px)
            if d is not None:
                coarse.append((f"where is the {x} from the {y} ?", d))
        if adjacent:
            out[x] = adjacent
        elif coarse:
            out[x] = coarse
        else:
            d = dominant_direction(end, px)
            if d is not None:
                out[x] = [(f"where is the {x} from me ?", d)]
    return out


def generate_log(world: TravelWorld, rng: np.random.Generator | None = None,
                 max_moves: int = 12, max_walks: int = 50) -> TravelLog:
    """Narrate a walk and attach a final question entailed by the log.

    A walk that admits no final question is discarded and redrawn, at most
    ``max_walks`` times.
    """
    rng = rng if rng is not None else np.random.default_rng([world.seed, 1])
    for _ in range(max_walks):
        sentences, path, logged = walk(world, rng, max_moves)
        candidates = final_candidates(world, logged, path[-1])
        if not candidates:
            continue
        target = _choose(rng, sorted(candidates, key=logged.index))
        question, answer = _choose(rng, candidates[target])
        return TravelLog(sentences, question, answer, world.seed, len(world.attractions), path)
    raise GenerationError(f"no answerable log for world seed {world.seed} after {max_walks} walks")


def generate_corpus(n_attractions: int, count: int, seed: int, max_moves: int = 12) -> list[TravelLog]:
    """``count`` logs over independently drawn worlds.

    A world on which no walk admits a final question (a sparse town whose
    start is far from every attraction) is replaced by the next world seed
    of the stream, so the corpus stays a pure function of ``seed``.
    """
    stream = np.random.SeedSequence(seed)
    logs: list[TravelLog] = []
    while len(logs) < count:
        for s in stream.spawn(1)[0].generate_state(1, dtype=np.uint32):
            try:
                logs.append(generate_log(generate_world(n_attractions, int(s)), max_moves=max_moves))
            except GenerationError:
                continue
    return logs


# -- corpus files --------------------------------------------------------------

def format_log(log: TravelLog) -> str:
    return "\n".join(log.sentences) + f"\n{SEPARATOR}\nQ: {log.question}\tA: {log.answer}\n"


def write_corpus(path: str | Path, logs: list[TravelLog], manifest: dict | None = None) -> None:
    """Records separated by blank lines; seeds go to ``<path>.manifest.json``."""
    path = Path(path)
    path.write_text("\n".join(format_log(log) for log in logs), "utf-8")
    meta = dict(manifest or {})
    meta["seeds"] = [log.seed for log in logs]
    meta["n_attractions"] = sorted({log.n_attractions for log in logs})
    Path(str(path) + ".manifest.json").write_text(json.dumps(meta, indent=1), "utf-8")


def iter_records(text: str) -> Iterator[TravelLog]:
    for block in text.split("\n\n"):
        lines = [l for l in block.split("\n") if l.strip()]
        if not lines:
            continue
        try:
            cut = lines.index(SEPARATOR)
        except ValueError:
            raise ValueError(f"record without separator: {lines[:2]}") from None
        qa = lines[cut + 1]
        q, a = qa.split("\t")
        if not (q.startswith("Q: ") and a.startswith("A: ")):
            raise ValueError(f"malformed question line: {qa!r}")
        yield TravelLog(lines[:cut], q[3:], a[3:])


def read_corpus(path: str | Path) -> list[TravelLog]:
    path = Path(path)
    logs = list(iter_records(path.read_text("utf-8")))
    manifest = Path(str(path) + ".manifest.json")
    if manifest.exists():
        meta = json.loads(manifest.read_text("utf-8"))
        n = meta.get("n_attractions", [0])
        for log, s in zip(logs, meta.get("seeds", [])):
            log.seed = s
            log.n_attractions = n[0] if len(n) == 1 else 0
    return logs
