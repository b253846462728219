# Shortest safe crossing, recomputed from the observation every turn.
# Ties break Up, Stay, Down, the same order the C++ solver uses, so following
# this policy reproduces the reference path move for move.
from math import gcd

GOAL = 9
ORDER = (("U", 1), ("S", 0), ("D", -1))
DY = dict(ORDER)

# The path found on an earlier turn stays optimal while the player is where it
# predicted and the cars are where they were expected to be.
_path = {}
_anchor = None


def _advance(cars, ring, dt):
    return [
        (lane, (head + speed * dt if direction == "right" else head - speed * dt) % ring, direction, speed, span)
        for lane, head, direction, speed, span in cars
    ]


def _blocked(by_lane, ring, dt, lane):
    for head, direction, speed, span_len in by_lane.get(lane, ()):
        shift = speed * dt
        if direction == "right":
            lo, hi = head - span_len + shift, head + shift
        else:
            lo, hi = head - shift, head + span_len - shift
        if (-lo) % ring <= hi - lo:
            return True
    return False


def next_action(state):
    global _anchor
    ring = state["ring"]
    cars = state["car_states"]
    y0 = state["player_states"]
    turn = state["turn"]
    move = _path.get((turn, y0))
    if move and _advance(_anchor[1], ring, turn - _anchor[0]) == _advance(cars, ring, 0):
        return move
    period = 1
    for car in cars:
        p = ring // gcd(ring, car[3])
        period = period * p // gcd(period, p)
    by_lane = {}
    for c_lane, *rest in cars:
        by_lane.setdefault(c_lane, []).append(rest)
    if _blocked(by_lane, ring, 0, y0):
        return "S"
    seen = {(0, y0)}
    frontier = [(0, y0, ())]
    for _ in range(1000):
        nxt = []
        for dt, y, path in frontier:
            for symbol, dy in ORDER:
                ny = min(max(y + dy, 0), GOAL)
                moves = path + (symbol,)
                if ny == GOAL:
                    _remember(turn, y0, cars, moves)
                    return moves[0]
                if 1 <= ny <= 8 and _blocked(by_lane, ring, dt + 1, ny):
                    continue
                key = ((dt + 1) % period, ny)
                if key in seen:
                    continue
                seen.add(key)
                nxt.append((dt + 1, ny, moves))
        if not nxt:
            break
        frontier = nxt
    return "S"


def _remember(turn, y, cars, moves):
    global _anchor
    _path.clear()
    _anchor = (turn, cars)
    for k, symbol in enumerate(moves):
        _path[(turn + k, y)] = symbol
        y = min(max(y + DY[symbol], 0), GOAL)
