# Greedy forager: steer toward the closest live food, but only through moves
# that keep enough open room for the body to follow.
MOVES = {"U": (0, 1), "D": (0, -1), "L": (-1, 0), "R": (1, 0)}
OPPOSITE = {"U": "D", "D": "U", "L": "R", "R": "L"}


def _room(start, walls, width, height, limit):
    seen = {start}
    todo = [start]
    while todo and len(seen) < limit:
        x, y = todo.pop()
        for c in ((x, y + 1), (x, y - 1), (x - 1, y), (x + 1, y)):  # MOVES order
            if c not in seen and c not in walls and 0 <= c[0] < width and 0 <= c[1] < height:
                seen.add(c), todo.append(c)
    return len(seen)


def next_action(state):
    width, height = state["size"]
    head = tuple(state["player"]["head"])
    heading = state["player"]["direction"]
    body = list(map(tuple, state["body"]))
    obstacles = set(map(tuple, state["obstacles"]))
    foods = [tuple(f["position"]) for f in state["foods"] if f["life_span"] > 0]

    best, best_key = heading, None
    for symbol, (dx, dy) in MOVES.items():
        if symbol == OPPOSITE[heading]:
            continue
        cell = (head[0] + dx, head[1] + dy)
        if not (0 <= cell[0] < width and 0 <= cell[1] < height) or cell in obstacles:
            continue
        eats = cell in foods
        walls = obstacles | set(body if eats else body[:-1])
        if cell in walls:
            continue
        room = _room(cell, walls, width, height, len(body) + 1)
        dist = min((abs(cell[0] - f[0]) + abs(cell[1] - f[1]) for f in foods), default=0)
        key = (room > len(body), eats, -dist, room)
        if best_key is None or key > best_key:
            best, best_key = symbol, key
    return best
