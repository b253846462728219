# Soup loop for one cook: onions into a pot, then a dish, the soup, the
# serving window. Walks around the partner and faces a station before
# pressing interact.
from collections import deque

STEPS = {"U": (0, -1), "D": (0, 1), "L": (-1, 0), "R": (1, 0)}

_station_cache = {}


def _stations(grid, glyph):
    key = (tuple(grid), glyph)
    if key not in _station_cache:
        cells = [(x, y) for y, row in enumerate(grid) for x, ch in enumerate(row) if ch == glyph]
        _station_cache[key] = set(cells) if glyph == " " else cells
    return _station_cache[key]


def _route(grid, start, targets, avoid):
    """First move toward a floor cell next to any target, or the facing move
    once standing next to one."""
    goals = {}
    for tx, ty in targets:
        for symbol, (dx, dy) in STEPS.items():
            goals.setdefault((tx - dx, ty - dy), symbol)
    if start in goals:
        return "adjacent", goals[start]
    floor = _stations(grid, " ")
    seen = {start: None}
    todo = deque([start])
    while todo:
        cur = x, y = todo.popleft()
        for symbol, nxt in (("U", (x, y - 1)), ("D", (x, y + 1)), ("L", (x - 1, y)), ("R", (x + 1, y))):
            if nxt not in floor or nxt in seen or nxt == avoid:
                continue
            seen[nxt] = (cur, symbol)
            if nxt in goals:
                while seen[nxt][0] != start:
                    nxt = seen[nxt][0]
                return "walk", seen[nxt][1]
            todo.append(nxt)
    return "stuck", "S"


def _go(grid, me, facing, targets, avoid):
    kind, symbol = _route(grid, me, targets, avoid)
    if kind == "adjacent":
        return "I" if facing == symbol else symbol
    return symbol


def next_action(state):
    grid = state["layout"]
    me = tuple(state["agent"]["position"])
    facing = state["agent"]["orientation"]
    held = state["agent"]["held_object"]
    partner = tuple(state["partner"]["position"])
    pots = [o for o in state["objects"] if "onions" in o]

    def go(cells):
        return _go(grid, me, facing, cells, partner)

    if held == "soup":
        return go(_stations(grid, "S"))
    if held == "dish":
        ready = [tuple(p["position"]) for p in pots if p["is_ready"]]
        cooking = [tuple(p["position"]) for p in pots if p["is_cooking"]]
        if ready:
            return go(ready)
        if cooking:
            kind, symbol = _route(grid, me, cooking, partner)
            return "S" if kind == "adjacent" else symbol
        return "S"
    if held == "onion":
        open_pots = [tuple(p["position"]) for p in pots if p["onions"] < 3]
        return go(open_pots) if open_pots else "S"
    if any(p["is_ready"] or p["is_cooking"] for p in pots):
        return go(_stations(grid, "D"))
    return go(_stations(grid, "O"))
