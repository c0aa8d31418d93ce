"""Format Profile detection, Format Contract rendering and structural features.

Detection is regex + heuristics over physical lines. Each profile category is
decided by majority vote among the lines that match one of its styles; a style
only wins when it has at least ``MIN_LINES`` matches and covers at least
``MIN_SHARE`` of the non-blank lines.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional, Sequence

MIN_LINES = 3
MIN_SHARE = 0.02
MAX_EXAMPLES = 5


class SceneHeaderStyle(str, Enum):
    NUMBER_BOLD = "NUMBER_BOLD"
    NUMBER_DOT_META = "NUMBER_DOT_META"
    SCENE_WORD = "SCENE_WORD"
    NUMBERED_PLAIN = "NUMBERED_PLAIN"
    OTHER = "OTHER"
    NONE = "NONE"


class DialogueMarker(str, Enum):
    ROLE_COLON = "ROLE_COLON"
    ROLE_NEWLINE = "ROLE_NEWLINE"
    OTHER = "OTHER"


class StageMarker(str, Enum):
    TRIANGLE = "TRIANGLE"
    BLACK_TRIANGLE = "BLACK_TRIANGLE"
    PAREN = "PAREN"
    NONE = "NONE"


class BlanklinePolicy(str, Enum):
    SINGLE_NEWLINE = "SINGLE_NEWLINE"
    DOUBLE_NEWLINE = "DOUBLE_NEWLINE"
    MIXED = "MIXED"


class EmphasisStyle(str, Enum):
    MARKDOWN_BOLD = "MARKDOWN_BOLD"
    NONE = "NONE"


class LineKind(str, Enum):
    SCENE_HEADER = "scene_header"
    STAGE_DIRECTION = "stage_direction"
    DIALOGUE = "dialogue"
    BLANK = "blank"
    OTHER = "other"


class LineInfo(NamedTuple):
    kind: LineKind
    style: Optional[str] = None  # enum value of the matching marker, if any
    bold: bool = False


# --- detectors -------------------------------------------------------------

_CN_NUM = "0-9一二三四五六七八九十百千零〇两"
_META = re.compile(
    r"[日夜晨晚内外]|黄昏|傍晚|\b(?:day|night|morning|evening|dawn|dusk|interior|exterior|int|ext)\b",
    re.IGNORECASE,
)
_NUMBER_BOLD = re.compile(r"^\*\*\s*\d{1,4}\s*\*\*")
_NUMBERED = re.compile(r"^\d{1,4}\s*[.．、]\s*(?P<rest>[^:：]{0,40})$")
_SCENE_WORD = re.compile(
    rf"^(?:scene\s*(?:\d+|[ivxlc]+)\b|第\s*[{_CN_NUM}]+\s*场|场景\s*[{_CN_NUM}]+)", re.IGNORECASE
)
_SLUGLINE = re.compile(r"^(?:(?:INT|EXT)\.|INT/EXT\.?|I/E\.?)\s|^(?:内景|外景)(?:[\s。．.，,、：:]|$)")

_TRIANGLE = re.compile(r"^[Δ△∆]")
_BLACK_TRIANGLE = re.compile(r"^[▲▴]")
_PAREN = re.compile(r"^[（(].*[）)]$")

_NAME_BAD = r"\s:：，,。.!！?？;；\"“”「」『』()（）\[\]【】*Δ△∆▲▴…—~～"
_ROLE_COLON = re.compile(
    rf"^(?P<role>[^{_NAME_BAD}][^{_NAME_BAD[2:]}]{{0,23}}?)\s*(?:[（(][^）)]{{0,20}}[)）])?\s*[:：]\s*\S"
)
_CUE = re.compile(rf"^[^{_NAME_BAD}][^{_NAME_BAD}]{{0,11}}(?:\s*[（(][^）)]{{0,10}}[)）])?$")

_BOLD_PAIR = re.compile(r"\*\*[^*\n]+?\*\*")

_SCENE_ORDER = [s for s in SceneHeaderStyle if s is not SceneHeaderStyle.NONE]
_DIALOGUE_ORDER = [DialogueMarker.ROLE_COLON, DialogueMarker.ROLE_NEWLINE]
_STAGE_ORDER = [StageMarker.TRIANGLE, StageMarker.BLACK_TRIANGLE, StageMarker.PAREN]


def _scene_style(s: str) -> Optional[SceneHeaderStyle]:
    if _NUMBER_BOLD.match(s):
        return SceneHeaderStyle.NUMBER_BOLD
    m = _NUMBERED.match(s)
    if m:
        rest = m.group("rest")
        if _META.search(rest):
            return SceneHeaderStyle.NUMBER_DOT_META
        if len(rest.strip()) <= 30:
            return SceneHeaderStyle.NUMBERED_PLAIN
    if _SCENE_WORD.match(s):
        return SceneHeaderStyle.SCENE_WORD
    if _SLUGLINE.match(s):
        return SceneHeaderStyle.OTHER
    return None


def _stage_style(s: str) -> Optional[StageMarker]:
    if _TRIANGLE.match(s):
        return StageMarker.TRIANGLE
    if _BLACK_TRIANGLE.match(s):
        return StageMarker.BLACK_TRIANGLE
    if _PAREN.match(s):
        return StageMarker.PAREN
    return None


def bold_pairs(line: str) -> int:
    """Number of ``**...**`` pairs, ignoring a bold scene-number prefix."""
    s = line.strip()
    m = _NUMBER_BOLD.match(s)
    if m:
        s = s[m.end():]
    return len(_BOLD_PAIR.findall(s))


def _active(hint_value, order, catch_all):
    # NONE disables the category, the catch-all value enables every style
    if hint_value is None or hint_value == catch_all:
        return set(order)
    return {hint_value}


def classify_line(line: str, profile_hint: Optional["FormatProfile"] = None) -> LineInfo:
    """Context-free class of one physical line.

    Priority: scene header > stage direction > dialogue > blank > other.
    ``ROLE_NEWLINE`` dialogue needs the following line, so it is only
    recognised by :func:`classify_lines`.
    """
    s = line.strip(" \t　")
    bold = bold_pairs(s) > 0
    if not s:
        return LineInfo(LineKind.BLANK, None, False)
    scene_ok, stage_ok, dlg_ok = _detectors(profile_hint)
    st = _scene_style(s)
    if st is not None and st in scene_ok:
        return LineInfo(LineKind.SCENE_HEADER, st.value, bold)
    sd = _stage_style(s)
    if sd is not None and sd in stage_ok:
        return LineInfo(LineKind.STAGE_DIRECTION, sd.value, bold)
    if DialogueMarker.ROLE_COLON in dlg_ok and _ROLE_COLON.match(s):
        return LineInfo(LineKind.DIALOGUE, DialogueMarker.ROLE_COLON.value, bold)
    return LineInfo(LineKind.OTHER, None, bold)


def _detectors(hint):
    if hint is None:
        return set(_SCENE_ORDER), set(_STAGE_ORDER), set(_DIALOGUE_ORDER)
    if hint.scene_header_style is SceneHeaderStyle.NONE:
        scene = set()
    elif hint.scene_header_style is SceneHeaderStyle.OTHER:
        scene = set(_SCENE_ORDER)
    else:
        scene = {hint.scene_header_style}
    stage = set() if hint.stage_direction_marker is StageMarker.NONE else {hint.stage_direction_marker}
    dlg = _active(hint.dialogue_marker, _DIALOGUE_ORDER, DialogueMarker.OTHER)
    return scene, stage, dlg


def split_lines(text: str) -> list[str]:
    """Physical lines; a trailing newline does not create an extra blank line."""
    if not text:
        return []
    lines = text.split("\n")
    if text.endswith("\n"):
        lines.pop()
    return lines


def classify_lines(lines: Sequence[str], profile_hint: Optional["FormatProfile"] = None) -> list[LineInfo]:
    """Classify a block of lines, adding ``ROLE_NEWLINE`` cue/speech pairs."""
    infos = [classify_line(ln, profile_hint) for ln in lines]
    _, _, dlg_ok = _detectors(profile_hint)
    if DialogueMarker.ROLE_NEWLINE not in dlg_ok:
        return infos
    i = 0
    n = len(lines)
    while i < n - 1:
        cur, nxt = infos[i], infos[i + 1]
        if (
            cur.kind is LineKind.OTHER
            and _CUE.match(lines[i].strip(" \t　"))
            and nxt.kind is LineKind.OTHER
        ):
            infos[i] = LineInfo(LineKind.DIALOGUE, DialogueMarker.ROLE_NEWLINE.value, cur.bold)
            infos[i + 1] = LineInfo(LineKind.DIALOGUE, "speech", nxt.bold)
            i += 2
            continue
        i += 1
    return infos


# --- profile ---------------------------------------------------------------

@dataclass
class FormatProfile:
    scene_header_style: SceneHeaderStyle = SceneHeaderStyle.NONE
    dialogue_marker: DialogueMarker = DialogueMarker.OTHER
    stage_direction_marker: StageMarker = StageMarker.NONE
    blankline_policy: BlanklinePolicy = BlanklinePolicy.SINGLE_NEWLINE
    emphasis_style: EmphasisStyle = EmphasisStyle.NONE
    examples: dict = field(
        default_factory=lambda: {"scene_headers": [], "dialogues": [], "stage_directions": []}
    )

    def __post_init__(self):
        self.scene_header_style = SceneHeaderStyle(self.scene_header_style)
        self.dialogue_marker = DialogueMarker(self.dialogue_marker)
        self.stage_direction_marker = StageMarker(self.stage_direction_marker)
        self.blankline_policy = BlanklinePolicy(self.blankline_policy)
        self.emphasis_style = EmphasisStyle(self.emphasis_style)
        for key in ("scene_headers", "dialogues", "stage_directions"):
            self.examples.setdefault(key, [])

    def to_dict(self) -> dict:
        return {
            "scene_header_style": self.scene_header_style.value,
            "dialogue_marker": self.dialogue_marker.value,
            "stage_direction_marker": self.stage_direction_marker.value,
            "blankline_policy": self.blankline_policy.value,
            "emphasis_style": self.emphasis_style.value,
            "examples": {k: list(v) for k, v in self.examples.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FormatProfile":
        return cls(
            scene_header_style=d["scene_header_style"],
            dialogue_marker=d["dialogue_marker"],
            stage_direction_marker=d["stage_direction_marker"],
            blankline_policy=d["blankline_policy"],
            emphasis_style=d["emphasis_style"],
            examples={k: list(v) for k, v in d.get("examples", {}).items()},
        )

    def key(self) -> tuple:
        """The five enum fields, without examples."""
        return (
            self.scene_header_style,
            self.dialogue_marker,
            self.stage_direction_marker,
            self.blankline_policy,
            self.emphasis_style,
        )


def _vote(counts: dict, order, n_nonblank: int):
    best, best_n = None, 0
    for style in order:
        c = counts.get(style, 0)
        if c > best_n:
            best, best_n = style, c
    if best is not None and best_n >= MIN_LINES and best_n >= MIN_SHARE * n_nonblank:
        return best
    return None


def _blank_policy(lines: Sequence[str], infos: Sequence[LineInfo]) -> BlanklinePolicy:
    gaps_blank = gaps = 0
    prev = None
    blank_run = 0
    for idx, info in enumerate(infos):
        if info.kind is LineKind.BLANK:
            blank_run += 1
            continue
        if prev is not None:
            # cue -> speech is one dialogue element, not a separation
            if not (infos[prev].style == DialogueMarker.ROLE_NEWLINE.value and blank_run == 0):
                gaps += 1
                gaps_blank += blank_run > 0
        prev = idx
        blank_run = 0
    if gaps == 0:
        return BlanklinePolicy.SINGLE_NEWLINE
    share = gaps_blank / gaps
    if share <= 0.1:
        return BlanklinePolicy.SINGLE_NEWLINE
    if share >= 0.9:
        return BlanklinePolicy.DOUBLE_NEWLINE
    return BlanklinePolicy.MIXED


def detect_profile(text: str) -> FormatProfile:
    """Detect the Format Profile of a normalised script text."""
    lines = split_lines(text)
    infos = classify_lines(lines)
    n_nonblank = sum(1 for i in infos if i.kind is not LineKind.BLANK)

    scene_counts: dict = {}
    stage_counts: dict = {}
    dlg_counts: dict = {}
    bold_lines = 0
    for info in infos:
        if info.bold:
            bold_lines += 1
        if info.kind is LineKind.SCENE_HEADER:
            st = SceneHeaderStyle(info.style)
            scene_counts[st] = scene_counts.get(st, 0) + 1
        elif info.kind is LineKind.STAGE_DIRECTION:
            sd = StageMarker(info.style)
            stage_counts[sd] = stage_counts.get(sd, 0) + 1
        elif info.kind is LineKind.DIALOGUE and info.style != "speech":
            dm = DialogueMarker(info.style)
            dlg_counts[dm] = dlg_counts.get(dm, 0) + 1

    scene = _vote(scene_counts, _SCENE_ORDER, n_nonblank) or SceneHeaderStyle.NONE
    stage = _vote(stage_counts, _STAGE_ORDER, n_nonblank) or StageMarker.NONE
    dlg = _vote(dlg_counts, _DIALOGUE_ORDER, n_nonblank) or DialogueMarker.OTHER
    emph = (
        EmphasisStyle.MARKDOWN_BOLD
        if bold_lines >= MIN_LINES and bold_lines >= MIN_SHARE * n_nonblank
        else EmphasisStyle.NONE
    )
    policy = _blank_policy(lines, infos) if n_nonblank else BlanklinePolicy.SINGLE_NEWLINE

    examples = {"scene_headers": [], "dialogues": [], "stage_directions": []}
    for i, info in enumerate(infos):
        s = lines[i].strip(" \t　")
        if info.kind is LineKind.SCENE_HEADER and info.style == scene.value:
            bucket, sample = "scene_headers", s
        elif info.kind is LineKind.STAGE_DIRECTION and info.style == stage.value:
            bucket, sample = "stage_directions", s
        elif info.kind is LineKind.DIALOGUE and info.style == dlg.value:
            bucket = "dialogues"
            sample = s if dlg is DialogueMarker.ROLE_COLON else s + "\n" + lines[i + 1].strip(" \t　")
        else:
            continue
        if len(examples[bucket]) < MAX_EXAMPLES:
            examples[bucket].append(sample)

    return FormatProfile(scene, dlg, stage, policy, emph, examples)


# --- contract --------------------------------------------------------------

_SCENE_TEXT = {
    SceneHeaderStyle.NUMBER_BOLD: "open every scene with a bold scene number such as **1**, followed by the location",
    SceneHeaderStyle.NUMBER_DOT_META: 'open every scene with "N. time, interior/exterior, location" (number, dot, then scene metadata)',
    SceneHeaderStyle.SCENE_WORD: 'open every scene with a scene word and number, such as "Scene 3" or "第3场"',
    SceneHeaderStyle.NUMBERED_PLAIN: 'open every scene with a bare scene number and dot, such as "12.", optionally followed by a short location',
    SceneHeaderStyle.OTHER: "open scenes with headers in the same style as Part I (e.g. INT./EXT. sluglines)",
    SceneHeaderStyle.NONE: "the script uses no special scene headers; do not add scene numbers or headings",
}
_DIALOGUE_TEXT = {
    DialogueMarker.ROLE_COLON: 'write every spoken line as "Role: line" on one line (role name, colon, speech)',
    DialogueMarker.ROLE_NEWLINE: "put the role name alone on its own line and the speech on the next line",
    DialogueMarker.OTHER: "no fixed role marker was detected; present dialogue the same way Part I does",
}
_STAGE_TEXT = {
    StageMarker.TRIANGLE: "begin every stage-direction line with the triangle symbol Δ",
    StageMarker.BLACK_TRIANGLE: "begin every stage-direction line with the black triangle symbol ▲",
    StageMarker.PAREN: "write stage directions as whole lines enclosed in parentheses, e.g. （他转身离开。）",
    StageMarker.NONE: "no special stage-direction marker; write action as plain prose lines",
}
_BLANK_TEXT = {
    BlanklinePolicy.SINGLE_NEWLINE: "separate lines with a single line break; do not insert blank lines",
    BlanklinePolicy.DOUBLE_NEWLINE: "separate every element (header, action, dialogue block) with exactly one blank line",
    BlanklinePolicy.MIXED: "mix single line breaks and blank lines the way Part I does",
}
_EMPH_TEXT = {
    EmphasisStyle.MARKDOWN_BOLD: "use markdown bold (**like this**) for emphasis, as Part I does",
    EmphasisStyle.NONE: "do not use bold or other markdown emphasis",
}


def render_contract(profile: FormatProfile) -> str:
    """Natural-language Format Contract for embedding in generation prompts."""
    out = [
        "Format Contract",
        f"- Scene headers ({profile.scene_header_style.value}): {_SCENE_TEXT[profile.scene_header_style]}.",
        f"- Dialogue ({profile.dialogue_marker.value}): {_DIALOGUE_TEXT[profile.dialogue_marker]}.",
        f"- Stage directions ({profile.stage_direction_marker.value}): {_STAGE_TEXT[profile.stage_direction_marker]}.",
        f"- Blank lines ({profile.blankline_policy.value}): {_BLANK_TEXT[profile.blankline_policy]}.",
        f"- Emphasis ({profile.emphasis_style.value}): {_EMPH_TEXT[profile.emphasis_style]}.",
    ]
    labels = (
        ("scene_headers", "Scene header examples"),
        ("dialogues", "Dialogue examples"),
        ("stage_directions", "Stage direction examples"),
    )
    for key, label in labels:
        samples = profile.examples.get(key, [])[:2]
        if samples:
            out.append(f"- {label}:")
            for s in samples:
                out.extend("    " + part for part in s.split("\n"))
    return "\n".join(out) + "\n"


# --- features --------------------------------------------------------------

FEATURE_NAMES = ("scene_ratio", "dialogue_ratio", "blank_ratio", "stage_ratio", "bold_density")


@dataclass(frozen=True)
class StructuralFeatures:
    scene_ratio: float = 0.0
    dialogue_ratio: float = 0.0
    blank_ratio: float = 0.0
    stage_ratio: float = 0.0
    bold_density: float = 0.0

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, k) for k in FEATURE_NAMES)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in FEATURE_NAMES}


def extract_features(text: str, profile: FormatProfile) -> StructuralFeatures:
    lines = split_lines(text)
    if not lines:
        return StructuralFeatures()
    infos = classify_lines(lines, profile)
    total = len(lines)
    counts = {k: 0 for k in LineKind}
    for info in infos:
        counts[info.kind] += 1
    bold = sum(bold_pairs(ln) for ln in lines)
    return StructuralFeatures(
        scene_ratio=counts[LineKind.SCENE_HEADER] / total,
        dialogue_ratio=counts[LineKind.DIALOGUE] / total,
        blank_ratio=counts[LineKind.BLANK] / total,
        stage_ratio=counts[LineKind.STAGE_DIRECTION] / total,
        bold_density=bold / total,
    )


# --- synthesis -------------------------------------------------------------

_NAMES = ["程蝶衣", "段小楼", "唐仁", "秦风", "菊仙", "思凡"]
_PLACES = ["客厅", "戏园", "车站", "后台", "街口", "茶楼"]
_SPEECH = ["师哥，你听我说。", "这事儿不能就这么算了。", "你到底想怎么样？", "走吧，天快亮了。", "我不信。"]
_ACTION = ["他推开门，走进屋里。", "众人面面相觑，没人说话。", "雨越下越大，街上空无一人。", "她低头整理着戏服。"]
_BOLD_ACTION = ["他看见了**那封信**。", "**锣声**突然响起。", "她攥紧了**那把扇子**。"]


def _scene_line(style: SceneHeaderStyle, n: int, rng: random.Random) -> Optional[str]:
    place = rng.choice(_PLACES)
    return {
        SceneHeaderStyle.NUMBER_BOLD: f"**{n}**，{place}",
        SceneHeaderStyle.NUMBER_DOT_META: f"{n}. {rng.choice(['日', '夜'])}，{rng.choice(['内', '外'])}，{place}",
        SceneHeaderStyle.SCENE_WORD: f"第{n}场 {place}",
        SceneHeaderStyle.NUMBERED_PLAIN: f"{n}. {place}",
        SceneHeaderStyle.OTHER: f"INT. {place} - {rng.choice(['DAY', 'NIGHT'])}",
    }.get(style)


def _stage_line(style: StageMarker, rng: random.Random) -> Optional[str]:
    act = rng.choice(_ACTION)
    return {
        StageMarker.TRIANGLE: f"Δ {act}",
        StageMarker.BLACK_TRIANGLE: f"▲ {act}",
        StageMarker.PAREN: f"（{act}）",
    }.get(style)


def synthesize_script(profile: FormatProfile, n_lines: int = 60, seed: int = 0) -> str:
    """Emit an ``n_lines``-line script written in the style ``profile`` describes.

    Used as a round-trip oracle for :func:`detect_profile` and to build test
    corpora.
    """
    rng = random.Random(seed)
    elements: list[list[str]] = []  # each element is 1 line, or cue+speech
    scene_no = 1
    while sum(len(e) for e in elements) < 2 * n_lines:
        sc = _scene_line(profile.scene_header_style, scene_no, rng)
        scene_no += 1
        if sc:
            elements.append([sc])
        elements.append([rng.choice(_ACTION)])
        st = _stage_line(profile.stage_direction_marker, rng)
        if st:
            elements.append([st])
        for _ in range(2):
            name, speech = rng.choice(_NAMES), rng.choice(_SPEECH)
            if profile.dialogue_marker is DialogueMarker.ROLE_COLON:
                elements.append([f"{name}：{speech}"])
            elif profile.dialogue_marker is DialogueMarker.ROLE_NEWLINE:
                elements.append([name, speech])
            else:
                elements.append([f"“{speech}”{name}说。"])
        if profile.emphasis_style is EmphasisStyle.MARKDOWN_BOLD:
            elements.append([rng.choice(_BOLD_ACTION)])
        else:
            elements.append([rng.choice(_ACTION)])

    lines: list[str] = []
    for k, el in enumerate(elements):
        sep = []
        if k > 0 and (
            profile.blankline_policy is BlanklinePolicy.DOUBLE_NEWLINE
            or (profile.blankline_policy is BlanklinePolicy.MIXED and k % 2 == 0)
        ):
            sep = [""]
        if len(lines) + len(sep) + len(el) > n_lines:
            break
        lines.extend(sep + el)
    # pad at the end; trailing blanks separate nothing, so the policy is unaffected
    lines.extend([""] * (n_lines - len(lines)))
    return "\n".join(lines) + "\n"


def enum_grid() -> list[FormatProfile]:
    """Every combination of the five profile enums."""
    return [
        FormatProfile(sc, dm, sd, bp, em)
        for sc in SceneHeaderStyle
        for dm in DialogueMarker
        for sd in StageMarker
        for bp in BlanklinePolicy
        for em in EmphasisStyle
    ]
