#!/usr/bin/env python3
"""Generates fixture_200.csv: 200 synthetic academic-export rows drawn from
six social-science themes. Output is committed; rerun only to change it."""
import csv
import random

THEMES = {
    "family": "family parent child marriage household divorce sibling kinship "
              "caregiving grandparent mother father infant adoption",
    "education": "school student teacher university curriculum tuition degree "
                 "literacy classroom graduate scholarship enrollment learning",
    "income": "income wage poverty wealth salary inequality pension savings "
              "welfare budget debt earnings allowance",
    "migration": "immigrant migration refugee citizenship language diaspora "
                 "settlement border visa integration ethnicity homeland",
    "health": "health hospital insurance disease clinic nurse diagnosis "
              "vaccine wellbeing disability mortality treatment",
    "work": "employment job worker employer career union contract labor "
            "occupation workplace promotion overtime recruitment",
}
FILLER = "the of and in a to with for on study survey results data analysis".split()
TITLE_PREFIX = ["Patterns of", "Effects of", "Changes in", "Evidence on", "Trends in"]


def main():
    rng = random.Random(20240601)
    names = list(THEMES)
    words = {t: THEMES[t].split() for t in names}
    rows = []
    for i in range(200):
        main_theme = names[i % len(names)]
        other = rng.choice([t for t in names if t != main_theme])
        mix = rng.uniform(0.7, 0.95)
        n = rng.randint(35, 80)
        body = []
        for _ in range(n):
            r = rng.random()
            if r < 0.15:
                body.append(rng.choice(FILLER))
            elif r < 0.15 + 0.85 * mix:
                body.append(rng.choice(words[main_theme]))
            else:
                body.append(rng.choice(words[other]))
        title = f"{rng.choice(TITLE_PREFIX)} {rng.choice(words[main_theme])} and {rng.choice(words[other])} ({i})"
        abstract = " ".join(body).capitalize() + "."
        keywords = "; ".join(rng.sample(words[main_theme], 3))
        rows.append([title, abstract, keywords, str(2000 + i % 24)])
    with open("fixture_200.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\r\n")
        w.writerow(["Article Title", "Abstract", "Author Keywords", "Publication Year"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
