#!/usr/bin/env python3
"""Kill the leader mid-run and watch the survivors re-elect.

The scenario wires two hub processes with eventually timely out-stars.
After the first hub crashes, its subjects' watch timers expire, every
survivor briefly claims leadership, and the backup hub's claim sticks
because its heartbeats are the only sustainable ones.
"""

from mpo import trace as tr
from mpo.audit import audit_report
from mpo.netsim import preset_dependable, run

N, CRASH_AT = 5, 8_000


def main():
    scn = preset_dependable(N, seed=31, horizon=40_000,
                            crash_victims=(0,), crash_steps=(CRASH_AT,))
    print(f"n={N}; leader 0 crashes at {CRASH_AT}; backup hub is "
          f"{scn.labels['backup']}")
    trace = run(scn)

    for ev in trace.events:
        if isinstance(ev, tr.Crash):
            print(f"step {ev.step:>6}: process {ev.proc} crashed")
        elif isinstance(ev, tr.LeaderChange) and ev.step > CRASH_AT:
            was = "nobody" if ev.old is None else ev.old
            print(f"step {ev.step:>6}: process {ev.proc} switched {was} -> {ev.new}")

    report = audit_report(trace)
    print(f"\nre-converged on {report.leader} at step {report.convergence_step}")
    print(f"tail origins: {sorted(report.origins_after_cutoff)}; "
          f"max packets per tail message "
          f"{report.max_packets_per_message_after_cutoff}")
    print(f"final outputs of survivors: "
          f"{ {p: trace.final_leaders[p] for p in trace.correct_processes()} }")


if __name__ == "__main__":
    main()
