"""Closed word lists used by the syntax heuristics and the tagger features."""

from __future__ import annotations

import re

# Multi-word conditional / sequencing markers, longest first when matched.
MARKER_PHRASES: tuple[tuple[str, ...], ...] = tuple(
    sorted(
        (
            tuple(p.split())
            for p in (
                "if", "only if", "if not", "if so", "if yes", "if no", "even if",
                "unless", "provided that", "providing that", "provided", "providing",
                "on the condition that", "on condition that", "as long as", "so long as",
                "in case", "in the event that", "assuming that", "assuming", "suppose",
                "supposing", "when", "whenever", "otherwise", "else", "or else",
                "then", "and", "and then", "after that", "afterwards", "first",
                "firstly", "second", "secondly", "finally", "lastly", "next", "also",
                "before", "after",
            )
        ),
        key=len,
        reverse=True,
    )
)

MARKER_WORDS = frozenset(w for p in MARKER_PHRASES for w in p if w not in ("the", "that", "as", "on", "in", "so", "event", "not", "yes", "no"))

DETERMINERS = frozenset(
    "a an the my your his her our their its this these those that some any "
    "all every each no another other such both either neither".split()
)
PREPOSITIONS = frozenset(
    "to from in on at for with by of into onto about over under between via through "
    "within without per across toward towards during until till upon off out up down "
    "against among around behind beside besides beyond near than like".split()
)
SUBJECT_PRONOUNS = frozenset("i you he she we they it".split())
PRONOUNS = SUBJECT_PRONOUNS | frozenset(
    "me him us them myself yourself himself herself ourselves yourselves themselves "
    "itself mine yours ours theirs hers someone somebody something everyone everybody "
    "everything anyone anybody anything nobody nothing one".split()
) | frozenset("it's i'm i've i'd i'll you're you've we're they're he's she's that's there's".split())
AUXILIARIES = frozenset(
    "is am are was were be been being do does did will would can could should shall "
    "may might must don't doesn't didn't won't wouldn't can't cannot couldn't shouldn't "
    "isn't aren't wasn't weren't haven't hasn't hadn't 'll 're 've 'd".split()
)
CONJUNCTIONS = frozenset("and or but nor".split())
FUNCTION_OTHER = frozenset(
    "please kindly not also then if unless that so just only even when whenever while "
    "because since though although whether else otherwise as too very there here "
    "what which who whom whose where why how yes ok okay".split()
)
# words that start a new clause when scanning left for a predicate
CLAUSE_OPENERS = frozenset(
    "if unless then otherwise else when whenever provided providing that because while "
    "but and or as since though although whether".split()
)
NUMBER_WORDS = frozenset(
    "zero one two three four five six seven eight nine ten eleven twelve twenty thirty "
    "forty fifty sixty seventy eighty ninety hundred thousand million billion half "
    "dozen".split()
)

VERBS = frozenset(
    """
    accept access activate add adjust agree allow apply approve arrange ask assign
    attach authorize authorise avoid back bake become begin block book borrow bring
    buy calculate call cancel catch change charge chat check choose clean clear
    close collect come compare complete confirm connect consider contact continue
    convert copy cost cover create credit cut debit decline decrease delete deliver
    deposit describe disable display do download drink drive drop email enable end
    enroll enter exchange expect explain extend fetch file fill find finish fix
    fly follow forward freeze get give go grab hand help hold include increase
    inform install invest invite issue join keep know leave lend let like list
    listen live load lock log look lose mail make manage mark meet message modify
    move need notify open order organize organise pay pick place plan play post
    prepare print process provide purchase put raise rain reach read receive
    recharge redeem refund register reject reload remind remove renew rent repay
    replace reply report request reserve reset restart retrieve return review
    run save say schedule see sell send set settle share shop show shut sign
    snow start stay stop store submit subscribe suggest switch take talk tell
    text think top track transfer travel try turn unblock unlock update upgrade
    upload use verify visit wait want wash watch win wire withdraw work write
    have has had hire ship pack eat cook sleep walk run swim study learn teach
    raise lower dial ring ping schedule rebook reschedule cancel waive claim
    apply file remit top-up recharge renew block unfreeze
    """.split()
)

NOUNS = frozenset(
    """
    account accounts balance bank bill bills card cards cash money bucks dollars
    euros loan loans policy insurance payment payments statement statements saving
    savings checking credit debit fee fees rate interest deposit transaction
    transactions transfer amount limit phone plan data internet service network
    ticket tickets game match team player score doctor appointment hospital
    medicine prescription server laptop computer password email order orders
    package delivery address house home office car train flight hotel room
    raincoat umbrella coffee tea lunch dinner breakfast meeting report file files
    wife husband son daughter mom dad mother father brother sister friend boss
    manager customer user team weather rain snow today tomorrow tonight week
    month year day morning evening night time bread butter milk water
    """.split()
)

_NUMBER_RE = re.compile(r"^[$€£₹]?[+-]?\d[\d,.:]*(?:k|m|%|st|nd|rd|th)?$", re.IGNORECASE)
_CURRENCY_RE = re.compile(r"^[$€£₹]\d|^\d[\d,.]*[$€£₹]$")
PUNCT = frozenset(",.;:?!()\"'-")
SENTENCE_END = frozenset(".?!")
BOUNDARY_PUNCT = frozenset(",.;:?!")


def is_number(word: str) -> bool:
    return bool(_NUMBER_RE.match(word)) or word.lower() in NUMBER_WORDS


def is_currency(word: str) -> bool:
    return bool(_CURRENCY_RE.match(word))


def verb_lemma_known(word: str) -> bool:
    """Whether ``word`` is a known verb, allowing regular -s/-ed/-ing inflection."""
    w = word.lower()
    if w in VERBS:
        return True
    for suffix, repl in (("ies", "y"), ("es", ""), ("s", ""), ("ied", "y"), ("ed", ""), ("ed", "e"), ("ing", ""), ("ing", "e")):
        if w.endswith(suffix) and len(w) > len(suffix) + 1:
            stem = w[: -len(suffix)] + repl
            if stem in VERBS:
                return True
            # doubled consonant: stopped, planning
            if suffix in ("ed", "ing") and len(stem) > 2 and stem[-1] == stem[-2] and stem[:-1] in VERBS:
                return True
    return False


def marker_spans(words: list[str]) -> list[tuple[int, int, str]]:
    """Non-overlapping marker phrase occurrences as ``(start, end, phrase)``, greedy left to right."""
    low = [w.lower() for w in words]
    out = []
    i = 0
    while i < len(low):
        for phrase in MARKER_PHRASES:
            if tuple(low[i:i + len(phrase)]) == phrase:
                out.append((i, i + len(phrase), " ".join(phrase)))
                i += len(phrase)
                break
        else:
            i += 1
    return out
