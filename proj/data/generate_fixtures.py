#!/usr/bin/env python3
"""Writes the bundled scenario fixtures into data/.

synthetic-terminal: two terminal environments (WH, SG) joined by ferry links.
Each terminal has a concourse with street-side entrance C, a waiting-area
door W, a waiting room closed by two scheduled boarding gates G and H, a ramp
to the boarding slip B, and a separate arrival hall from the alighting slip A
through delaying doors D to the street exit S.

two-route: a queue-only network with a congestible route A (100 s free) and a
fixed route B (130 s free).
"""

import pathlib

ROOT = pathlib.Path(__file__).resolve().parent

WIDTH = 60
HEIGHT = 54
SPLIT = 33  # wall row between the boarding and the arrival sections


def terminal(env_id):
    grid = [["#"] * WIDTH for _ in range(HEIGHT)]

    def fill(x0, y0, x1, y1, ch):
        for y in range(y0, y1 + 1):
            for x in range(x0, x1 + 1):
                grid[y][x] = ch

    # Boarding section.
    fill(1, 1, 14, SPLIT - 1, ".")   # concourse
    fill(16, 1, 45, SPLIT - 1, ".")  # waiting room
    fill(47, 1, 58, SPLIT - 1, ".")  # ramp
    fill(0, 12, 0, 21, "C")
    fill(15, 14, 15, 17, "W")
    fill(46, 6, 46, 9, "G")
    fill(46, 22, 46, 25, "H")
    fill(59, 12, 59, 21, "B")

    # Arrival section.
    fill(1, SPLIT + 1, 29, HEIGHT - 2, ".")   # street hall
    fill(31, SPLIT + 1, 58, HEIGHT - 2, ".")  # arrival hall
    fill(59, 38, 59, 47, "A")
    fill(30, 36, 30, 49, "D")
    fill(0, 38, 0, 47, "S")

    lines = [f"id={env_id}", f"width={WIDTH}", f"height={HEIGHT}", "free_speed=1.34"]
    lines += ["".join(row) for row in grid]
    lines += [
        f"target C kind=final node={env_id}_concourse",
        f"target W kind=intermediate node={env_id}_waiting",
        f"target G kind=scheduled schedule={env_id}_departure node={env_id}_gate1",
        f"target H kind=scheduled schedule={env_id}_departure node={env_id}_gate2",
        f"target B kind=final node={env_id}_board",
        f"target A kind=final node={env_id}_alight",
        f"target D kind=delaying delay=3 node={env_id}_doors",
        f"target S kind=final node={env_id}_street",
    ]
    return "\n".join(lines) + "\n"


def write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def synthetic_terminal():
    base = ROOT / "synthetic-terminal"
    write(base / "WH.env", terminal("WH"))
    write(base / "SG.env", terminal("SG"))
    ferry_speed = repr(8000.0 / 1500.0)
    write(
        base / "network.csv",
        "link_id,from,to,length_m,area_m2,v_free_mps,fc_agents_per_s,sc_agents\n"
        f"ferry_WH_SG,WH_board,SG_alight,8000,800,{ferry_speed},100,5200\n"
        f"ferry_SG_WH,SG_board,WH_alight,8000,800,{ferry_speed},100,5200\n",
    )
    write(
        base / "schedules.csv",
        "schedule_id,open_s,close_s\n"
        "WH_departure,180,1500\n"
        "SG_departure,1200,2400\n",
    )
    write(
        base / "segments.csv",
        "label,group,from_nodes,to_nodes,cycle,role\n"
        "WH_disembark,disembarking,WH_alight,WH_street,WH,disembark\n"
        "WH_boarding,boarding,WH_waiting,WH_board,WH,board\n"
        "SG_disembark,boarding,SG_alight,SG_street,SG,disembark\n",
    )
    for name, boarding, disembarking in (("observed-peak", 1400, 850), ("projection-2017", 1800, 1800)):
        write(
            base / f"demand-{name}.csv",
            "group,count,origin,destination,departure,window_start_s,window_end_s\n"
            f"boarding,{boarding},WH_concourse,SG_street,at_once,0,0\n"
            f"disembarking,{disembarking},WH_alight,WH_street,at_once,0,0\n",
        )
        write(
            base / f"{name}.manifest",
            "environment=WH.env\n"
            "environment=SG.env\n"
            "network=network.csv\n"
            "schedules=schedules.csv\n"
            f"demand_spec=demand-{name}.csv\n"
            "segments=segments.csv\n"
            f"name={name}\n"
            "sim_end=3000\n"
            "seed=2017\n"
            "mode=nash\n"
            "iterations=1\n"
            "replan_fraction=0.1\n",
        )


def two_route():
    base = ROOT / "two-route"
    write(
        base / "network.csv",
        "link_id,from,to,length_m,area_m2,v_free_mps,fc_agents_per_s,sc_agents\n"
        "A1,O,MA,99,100,1,0.5,1000\n"
        "A2,MA,D,1,100,1,1000,1000\n"
        "B1,O,MB,129,100,1,1000,1000\n"
        "B2,MB,D,1,100,1,1000,1000\n",
    )
    write(
        base / "demand.csv",
        "group,count,origin,destination,departure,window_start_s,window_end_s\n"
        "commuters,100,O,D,at_once,0,0\n",
    )
    write(
        base / "two-route.manifest",
        "network=network.csv\n"
        "demand_spec=demand.csv\n"
        "name=two-route\n"
        "sim_end=1000\n"
        "seed=7\n"
        "mode=nash\n"
        "iterations=30\n"
        "replan_fraction=0.1\n",
    )


if __name__ == "__main__":
    synthetic_terminal()
    two_route()
