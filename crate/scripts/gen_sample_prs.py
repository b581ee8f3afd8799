"""Generate the bundled synthetic pull-request history (crates/core/data/sample_prs.jsonl).

The project is fictional: eight functional areas, ten collaborators with area
specialties, and external submitters. Output is deterministic for a given seed.
"""
import json
import random
import sys
from datetime import datetime, timedelta, timezone

AREAS = {
    "parser": "parser parsing parse token tokens tokenizer lexer grammar syntax expression expressions "
              "ast node nodes precedence operator operators literal literals nested bracket brackets "
              "quote quoted escape escaping whitespace indentation",
    "network": "network networking http https request requests response responses socket sockets timeout "
               "timeouts retry retries proxy connection connections header headers tls certificate "
               "redirect redirects download upload streaming",
    "ui": "button buttons layout render rendering widget widgets window windows color colors theme themes "
          "font fonts icon icons dialog dialogs scroll scrolling click clicked hover tooltip screen",
    "build": "build builds compile compiler compiling linker linking dependency dependencies package "
             "packaging release releases version versions travis pipeline makefile cmake toolchain "
             "artifact artifacts cache caching install installer",
    "docs": "documentation docs readme tutorial tutorials example examples typo typos wording sentence "
            "paragraph guide guides chapter link links spelling grammar markdown reference references "
            "explanation explain explained",
    "storage": "database databases query queries table tables index indexes migration migrations schema "
               "transaction transactions commit rollback sqlite postgres column columns row rows record "
               "records storage persist persistence",
    "auth": "authentication login logins password passwords token session sessions permission permissions "
            "role roles user users account accounts oauth credential credentials secret secrets encrypt "
            "encryption security",
    "player": "playback play playing playlist playlists track tracks audio volume mixer stream streams "
              "album albums artist artists library libraries queue queued shuffle repeat seek seeking",
}

GENERAL = ("fix fixed fixes fixing add added adding update updated updating remove removed change changed "
           "improve improved support issue issues bug bugs crash crashes error errors test tests testing "
           "case cases check checks handle handling code behaviour behavior default option options value "
           "values function functions method methods call calls file files config configuration missing "
           "wrong correct correctly instead also when this that with from into should would could please "
           "thanks looks good merge merged review reviewed comment comments patch rebase squash").split()

FILLER = "the a an and or of to in on it is was for with this that be by as at not but we you i".split()

COLLABORATORS = {
    "alice": ["parser", "docs"],
    "bruno": ["network"],
    "chen": ["ui", "player"],
    "dana": ["build"],
    "emeka": ["storage"],
    "farah": ["auth", "network"],
    "gosia": ["player"],
    "hiro": ["parser", "build"],
    "ines": ["ui"],
    "jonas": ["storage", "auth"],
}

TITLE_TEMPLATES = [
    "Fix {a} {b}",
    "Add {a} support for {b}",
    "Improve {a} handling",
    "Handle {a} when {b} is missing",
    "Update {a} {b}",
    "Refactor {a} and {b}",
    "Remove unused {a}",
    "Crash on {a} {b}",
]


def words(rng, area, n, mix_area=None):
    vocab = AREAS[area].split()
    other = AREAS[mix_area].split() if mix_area else None
    out = []
    for _ in range(n):
        r = rng.random()
        if r < 0.50:
            out.append(rng.choice(vocab))
        elif other and r < 0.62:
            out.append(rng.choice(other))
        elif r < 0.82:
            out.append(rng.choice(GENERAL))
        else:
            out.append(rng.choice(FILLER))
    return out


def sentence(ws):
    text = " ".join(ws)
    return text[:1].upper() + text[1:] + "."


def main(seed=2016, n=240):
    rng = random.Random(seed)
    experts = {area: [c for c, areas in COLLABORATORS.items() if area in areas] for area in AREAS}
    area_names = sorted(AREAS)
    start = datetime(2015, 6, 1, tzinfo=timezone.utc)
    t = start
    out = []
    for i in range(1, n + 1):
        area = rng.choice(area_names)
        mix = rng.choice(area_names) if rng.random() < 0.3 else None
        vocab = AREAS[area].split()
        title = rng.choice(TITLE_TEMPLATES).format(a=rng.choice(vocab), b=rng.choice(vocab))
        description = " ".join(sentence(words(rng, area, rng.randint(8, 18), mix)) for _ in range(rng.randint(1, 3)))
        n_comments = rng.randint(1, 4)
        comments = [sentence(words(rng, area, rng.randint(6, 20), mix)) for _ in range(n_comments)]

        reviewers = set()
        n_reviewers = 1 if rng.random() < 0.6 else 2
        while len(reviewers) < n_reviewers:
            if rng.random() < 0.85:
                reviewers.add(rng.choice(experts[area]))
            else:
                reviewers.add(rng.choice(sorted(COLLABORATORS)))
        t += timedelta(hours=rng.randint(2, 60), minutes=rng.randint(0, 59))
        out.append({
            "id": str(i),
            "title": title,
            "description": description,
            "comments": comments,
            "submitter": f"contributor{rng.randint(1, 60)}",
            "reviewers": sorted(reviewers),
            "closed_at": t.strftime("%Y-%m-%dT%H:%M:%SZ"),
        })
    for pr in out:
        sys.stdout.write(json.dumps(pr, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
