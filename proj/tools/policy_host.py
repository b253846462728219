#!/usr/bin/env python3
"""Runs model-written policies out of process.

The host is a small fork server: each policy runs in its own forked child,
so nothing one policy imports or mutates is visible to the next, and the
interpreter start-up cost is paid once per host instead of once per policy.

Protocol (newline-delimited JSON on stdin/stdout):
  -> {"source": "<python code defining next_action(state)>"}
  <- {"ready": true} | {"ready": false, "error": "..."}
  -> {"state": {...}, "turn": 7}
  <- {"action": "U"} | {"timeout": true} | {"error": "..."}
  -> {"end": true}
  <- {"bye": true}
After the child is gone, for whatever reason, the host writes
  <- {"exited": <status>}
and waits for the next "source".

In simulation the per-call deadline is a budget of executed Python lines,
so a policy times out at the same point on every run. In live mode it is a
wall-clock interval timer.
"""

import json
import os
import sys


class Deadline(Exception):
    pass


def line_budget_tracer(budget):
    remaining = budget

    def local(frame, event, arg):
        nonlocal remaining
        if event == "line":
            remaining -= 1
            if remaining < 0:
                raise Deadline()
        return local

    def tracer(frame, event, arg):
        return local

    return tracer


def call_with_line_budget(fn, state, budget):
    sys.settrace(line_budget_tracer(budget))
    try:
        return fn(state)
    finally:
        sys.settrace(None)


def call_with_timer(fn, state, seconds):
    import signal

    def on_alarm(signum, frame):
        raise Deadline()

    old = signal.signal(signal.SIGALRM, on_alarm)
    signal.setitimer(signal.ITIMER_REAL, seconds)
    try:
        return fn(state)
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, old)


def reply(obj):
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def serve(source, mode, line_budget, deadline):
    try:
        namespace = {"__name__": "policy"}
        exec(compile(source, "<policy>", "exec"), namespace)
        policy = namespace["next_action"]
        if not callable(policy):
            raise TypeError("next_action is not callable")
    except Exception as e:
        reply({"ready": False, "error": f"{type(e).__name__}: {e}"})
        return 1
    reply({"ready": True})

    while True:
        line = sys.stdin.readline()
        if not line:
            return 0
        if not line.strip():
            continue
        request = json.loads(line)
        if request.get("end"):
            reply({"bye": True})
            return 0
        try:
            if mode == "sim":
                action = call_with_line_budget(policy, request["state"], line_budget)
            else:
                action = call_with_timer(policy, request["state"], deadline)
        except Deadline:
            reply({"timeout": True})
            continue
        except Exception as e:
            # A policy that raises is dead; the scheduler replans.
            reply({"error": f"{type(e).__name__}: {e}"})
            return 1
        reply({"action": action if isinstance(action, str) else repr(action)})


def main():
    # argparse alone costs more to import than the rest of startup.
    opts = {"--mode": "sim", "--line-budget": "200000", "--deadline-ms": "1000"}
    argv = sys.argv[1:]
    for key, value in zip(argv[::2], argv[1::2]):
        if key not in opts:
            sys.stderr.write(f"unknown option {key}\n")
            return 2
        opts[key] = value
    mode = opts["--mode"]
    line_budget = int(opts["--line-budget"])
    deadline = int(opts["--deadline-ms"]) / 1000.0

    # Loaded once here so children do not each pay for them.
    import collections, heapq, itertools, math  # noqa: F401

    # The client sends nothing while a child runs except what the child
    # reads, so neither side ever holds the other's input in its buffer.
    while True:
        line = sys.stdin.readline()
        if not line:
            return 0
        if not line.strip():
            continue
        source = json.loads(line)["source"]
        sys.stdout.flush()
        pid = os.fork()
        if pid == 0:
            code = 1
            try:
                code = serve(source, mode, line_budget, deadline)
            finally:
                sys.stdout.flush()
                os._exit(code)
        _, status = os.waitpid(pid, 0)
        try:
            reply({"exited": os.waitstatus_to_exitcode(status)})
        except BrokenPipeError:
            return 0


if __name__ == "__main__":
    sys.exit(main())
