"""Attention-cost counters.

Counts *logical* attention score entries, i.e. (query position, key
position) pairs per attention application; the head count is an
implementation multiplier and is deliberately excluded so the counters
reflect attended-field sizes.  Off by default; enable around a forward
pass to audit its attention cost.
"""

enabled = False
events = []  # (site, entries) tuples in call order


def reset():
    events.clear()


def record(site, entries):
    if enabled:
        events.append((site, int(entries)))


def total(site=None):
    return sum(n for s, n in events if site is None or s == site)
