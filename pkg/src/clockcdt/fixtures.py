"""Published per-model item scores, kept as reference fixtures.

Each entry is ``(model, group, items, printed_total_raw, printed_weighted_raw)``
with items in table column order.  Printed totals are stored as published,
so consumers can compare them with the item sums.
"""

PUBLISHED_ITEM_SCORES = [
    ("Gemini Stable diffusion XL base 1.0", "Multimodal", (1, 0, 1, 1, 1, 1, 1, 0, 1, 1, 0, 1, 1), 10, 3),
    ("Gemini Stable Diffusion 3 Medium", "Multimodal", (1, 0, 1, 1, 1, 0, 1, 0, 1, 1, 0, 1, 1), 11, 3),
    ("Gemini Image Gen 2", "Multimodal", (1, 0, 1, 1, 1, 1, 1, 0, 1, 0, 0, 1, 1), 9, 2),
    ("GPT-4o", "Multimodal", (2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 1, 1), 13, 4),
    ("Gemini Nano", "Language", (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0), 0, 0),
    ("Gemini Pro 1.0", "Language", (2, 0, 0, 1, 0, 1, 1, 1, 1, 1, 0, 1, 1), 10, 3),
    ("Gemini Pro 1.5", "Language", (2, 0, 1, 1, 1, 1, 1, 1, 1, 2, 1, 1, 1), 14, 4),
    ("Gemini Adv.", "Language", (2, 0, 0, 1, 1, 1, 1, 1, 1, 0, 0, 1, 1), 11, 3),
    ("GPT-3.5 Turbo", "Language", (2, 0, 1, 1, 1, 1, 1, 1, 1, 0, 0, 1, 1), 12, 4),
    ("GPT-4 Turbo", "Language", (2, 0, 1, 1, 1, 1, 1, 1, 1, 2, 1, 1, 1), 14, 4),
    ("GP-4o", "Language", (0, 0, 0, 1, 1, 1, 1, 1, 1, 0, 0, 1, 1), 9, 2),
    ("Claude", "Language", (2, 0, 0, 1, 1, 1, 1, 0, 1, 1, 0, 1, 1), 10, 3),
]
