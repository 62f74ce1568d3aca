"""
Reading order and transcripts
=============================

Manga is read right to left. Panels are ordered by a recursive XY-cut that
takes the top strip first and the right column first; texts follow their
panel and run from the right edge leftwards.
"""

from mangascribe.chapter import BoundingBox, Chapter, CharacterNode, EdgeSet, PageGraph, PanelNode, TailNode, TextNode
from mangascribe.transcript import TranscriptParams, build_transcript, order_panels, order_texts, render_transcript

box = BoundingBox

# a wide top panel over two columns
panels = (
    PanelNode("top", 0, box(0, 0, 200, 90)),
    PanelNode("left", 0, box(0, 100, 95, 300)),
    PanelNode("right", 0, box(105, 100, 200, 300)),
)
characters = (
    CharacterNode("c-luffy", 0, box(120, 20, 160, 80), (1.0, 0.0)),
    CharacterNode("c-zoro", 0, box(20, 150, 70, 280), (0.0, 1.0)),
)
texts = (
    TextNode("t-hello", 0, box(165, 10, 195, 40), "Hey!", 0.95),
    TextNode("t-sfx", 0, box(60, 10, 100, 40), "BOOM", 0.05),
    TextNode("t-reply", 0, box(10, 110, 60, 140), "What now?", 0.9),
    TextNode("t-whisper", 0, box(150, 120, 190, 160), "...", 0.7),
)
edges = EdgeSet(
    text_char={("t-hello", "c-luffy"): 0.92, ("t-reply", "c-zoro"): 0.81, ("t-whisper", "c-luffy"): 0.2},
    text_tail={("t-hello", "tail-1"): 0.9},
)
page = PageGraph(0, characters, texts, (TailNode("tail-1", 0, box(160, 40, 170, 50)),), panels, edges)
chapter = Chapter((page,), embedding_dim=2, chapter_id="demo")

panel_order = order_panels(page)
print("panels:", panel_order)
print("texts: ", order_texts(page, panel_order))

names = {"c-luffy": "Luffy", "c-zoro": "Zoro"}

# the sound effect is not essential; the whisper's best edge is below 0.4
print(render_transcript(build_transcript(chapter, names)).decode())

# with tail gating only the text that has a tail keeps its speaker
gated = build_transcript(chapter, names, TranscriptParams(tail_gated=True))
print(render_transcript(gated).decode())
