"""Declaration corpus indexing and ranked lexical search.

Corpus files are plain text records::

    #theorem midpoint_cong : forall m a b, midp m a b -> cong m a m b
      The midpoint of a segment is equidistant from both endpoints.

A ``#kind name : signature`` header starts a declaration (kind is theorem,
lemma, definition, or structure); indented lines below it are documentation.

The default embedder is a deterministic lexical weighting: sublinear term
frequency, length-normalized per declaration, with the full declaration name
injected as a boosted feature so exact-name queries rank first.  Scores
depend only on the query and the scored declaration, which keeps rankings
stable when unrelated declarations are added.  Corpus vocabulary statistics
are stored in the index for diagnostics and query-token normalization.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

__all__ = [
    "Declaration",
    "Index",
    "CorpusParseError",
    "EmptyCorpus",
    "DECLARATION_KINDS",
    "DEFAULT_K",
    "tokenize",
    "ingest",
    "ingest_text",
    "build_index",
    "search",
    "save_index",
    "load_index",
]

DECLARATION_KINDS = ("theorem", "lemma", "definition", "structure")
DEFAULT_K = 10

# weight multiplier for the full declaration name feature
_NAME_BOOST = 4


class CorpusParseError(ValueError):
    def __init__(self, message: str, file: str, line: int):
        super().__init__(f"{file}:{line}: {message}")
        self.file = file
        self.line = line


class EmptyCorpus(ValueError):
    pass


@dataclass(frozen=True)
class Declaration:
    id: str
    name: str
    kind: str
    signature: str
    doc: str = ""
    origin_file: str = ""
    origin_line: int = 0


_HEADER_RE = re.compile(r"^#(\w+)\s+(\S+)\s*:\s*(.+)$")
_TOKEN_RE = re.compile(r"[A-Za-z]+|\d+")
_CAMEL_RE = re.compile(r"(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")


def tokenize(text: str) -> List[str]:
    """Lowercased word tokens with camelCase splitting."""
    out: List[str] = []
    for piece in _CAMEL_RE.sub(" ", text).split():
        out.extend(t.lower() for t in _TOKEN_RE.findall(piece))
    return out


def ingest_text(text: str, file: str = "<corpus>") -> List[Declaration]:
    declarations: List[Declaration] = []
    current: Optional[Dict[str, object]] = None

    def flush() -> None:
        nonlocal current
        if current is None:
            return
        declarations.append(
            Declaration(
                id=f"{Path(file).stem}:{current['line']}",
                name=str(current["name"]),
                kind=str(current["kind"]),
                signature=str(current["signature"]).strip(),
                doc=" ".join(current["doc"]).strip(),
                origin_file=file,
                origin_line=int(current["line"]),
            )
        )
        current = None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        if raw.startswith("#"):
            if raw.startswith("##"):  # section comment
                continue
            m = _HEADER_RE.match(raw.strip())
            if not m:
                raise CorpusParseError("malformed declaration header", file, line_no)
            kind = m.group(1)
            if kind not in DECLARATION_KINDS:
                raise CorpusParseError(f"unknown declaration kind {kind!r}", file, line_no)
            flush()
            current = {
                "kind": kind,
                "name": m.group(2),
                "signature": m.group(3),
                "doc": [],
                "line": line_no,
            }
            continue
        if raw[:1].isspace() and current is not None:
            current["doc"].append(raw.strip())
            continue
        raise CorpusParseError("text outside a declaration", file, line_no)
    flush()
    return declarations


def ingest(paths: Sequence) -> List[Declaration]:
    """Extract declarations from corpus files, ordered by (file, line)."""
    declarations: List[Declaration] = []
    for path in sorted(Path(p) for p in paths):
        declarations.extend(ingest_text(path.read_text("utf-8"), file=str(path)))
    return declarations


# ---------------------------------------------------------------------------
# index
# ---------------------------------------------------------------------------

Embedder = Callable[[Declaration], Dict[str, float]]


def _declaration_tokens(decl: Declaration) -> List[str]:
    tokens = tokenize(f"{decl.name} {decl.signature} {decl.doc}")
    tokens.extend([decl.name.lower()] * _NAME_BOOST)
    return tokens


def lexical_embedder(decl: Declaration) -> Dict[str, float]:
    """Sublinear tf, normalized by declaration length."""
    counts: Dict[str, int] = {}
    tokens = _declaration_tokens(decl)
    for tok in tokens:
        counts[tok] = counts.get(tok, 0) + 1
    norm = 1.0 + math.log(1.0 + len(tokens))
    return {tok: (1.0 + math.log(n)) / norm for tok, n in sorted(counts.items())}


@dataclass
class Index:
    declarations: Tuple[Declaration, ...]
    vectors: Tuple[Dict[str, float], ...]
    vocabulary: Dict[str, int]  # token -> document frequency
    meta: Dict[str, object] = field(default_factory=dict)

    def content_hash(self) -> str:
        """Hash of declarations + vectors + vocabulary (build time excluded)."""
        payload = {
            "declarations": [
                [d.id, d.name, d.kind, d.signature, d.doc] for d in self.declarations
            ],
            "vectors": [sorted(v.items()) for v in self.vectors],
            "vocabulary": sorted(self.vocabulary.items()),
        }
        blob = json.dumps(payload, ensure_ascii=False, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def build_index(
    declarations: Sequence[Declaration], embedder: Embedder = lexical_embedder
) -> Index:
    if not declarations:
        raise EmptyCorpus("no declarations to index")
    vectors = tuple(embedder(d) for d in declarations)
    vocabulary: Dict[str, int] = {}
    for vec in vectors:
        for tok in vec:
            vocabulary[tok] = vocabulary.get(tok, 0) + 1
    corpus_blob = "\n".join(
        f"{d.origin_file}:{d.origin_line}:{d.name}:{d.signature}:{d.doc}"
        for d in declarations
    ).encode()
    meta = {
        "version": 1,
        "corpus_hash": hashlib.sha256(corpus_blob).hexdigest(),
        "size": len(declarations),
    }
    return Index(tuple(declarations), vectors, vocabulary, meta)


def search(
    index: Index, query: str, k: int = DEFAULT_K
) -> List[Tuple[Declaration, float]]:
    """Top-k declarations by descending score, name then id as tie-break.

    Zero-overlap declarations are excluded, so the result may be shorter
    than ``k`` (or empty).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    q_counts: Dict[str, float] = {}
    for tok in tokenize(query):
        q_counts[tok] = q_counts.get(tok, 0.0) + 1.0
    whole = query.strip().lower()
    if whole:
        q_counts[whole] = q_counts.get(whole, 0.0) + 1.0
    # normalize against the corpus vocabulary: unseen tokens cannot score
    q_counts = {t: n for t, n in q_counts.items() if t in index.vocabulary}
    scored: List[Tuple[float, Declaration]] = []
    for decl, vec in zip(index.declarations, index.vectors):
        score = sum(q_n * vec.get(tok, 0.0) for tok, q_n in q_counts.items())
        if score > 0.0:
            scored.append((score, decl))
    scored.sort(key=lambda item: (-item[0], item[1].name, item[1].id))
    return [(decl, score) for score, decl in scored[:k]]


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_index(index: Index, path) -> None:
    obj = {
        "meta": index.meta,
        "content_hash": index.content_hash(),
        "vocabulary": index.vocabulary,
        "declarations": [
            {
                "id": d.id,
                "name": d.name,
                "kind": d.kind,
                "signature": d.signature,
                "doc": d.doc,
                "origin_file": d.origin_file,
                "origin_line": d.origin_line,
            }
            for d in index.declarations
        ],
        "vectors": [sorted(v.items()) for v in index.vectors],
    }
    Path(path).write_text(json.dumps(obj, ensure_ascii=False, sort_keys=True), "utf-8")


def load_index(path) -> Index:
    obj = json.loads(Path(path).read_text("utf-8"))
    declarations = tuple(Declaration(**d) for d in obj["declarations"])
    vectors = tuple({t: w for t, w in pairs} for pairs in obj["vectors"])
    index = Index(declarations, vectors, obj["vocabulary"], obj["meta"])
    stored = obj.get("content_hash")
    if stored and stored != index.content_hash():
        raise ValueError(f"index file {path} is corrupt (content hash mismatch)")
    return index


def load_bundled_corpus() -> List[Declaration]:
    """Declarations shipped with the package (desk-scale library substitute)."""
    from importlib import resources

    declarations: List[Declaration] = []
    root = resources.files("geoground.data").joinpath("corpus")
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".txt"):
            declarations.extend(ingest_text(entry.read_text("utf-8"), file=entry.name))
    return declarations
