"""Regenerate the bundled desk-scale fixtures under src/urbanplanner/data/fixtures.

Everything is derived from a fixed seed, so re-running reproduces the files byte for byte.
"""

import json
import math
import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "urbanplanner" / "data" / "fixtures"
SGT = timezone(timedelta(hours=8))
NOW = datetime(2024, 5, 6, 17, 0, tzinfo=SGT)
HOURS = 14 * 24

PLACES = [
    ("Jurong East", "place", 1.33315, 103.74220),
    ("lake side", "place", 1.34425, 103.72070),
    ("lake side MRT", "mrt station", 1.34424, 103.72083),
    ("lake side station", "mrt station", 1.34426, 103.72090),
    ("Lake Garden", "park", 1.34110, 103.72440),
    ("Starbucks@J-walk", "cafe", 1.33390, 103.74300),
    ("3 Gateway Dr. #02-04/04A Westgate, Singapore 608532", "address", 1.33430, 103.74280),
    ("Jem shopping centre", "mall", 1.33310, 103.74320),
    ("Serangoon road", "road", 1.31110, 103.85650),
    ("PIE express way", "road", 1.33400, 103.78700),
    ("Jurong Area", "place", 1.34040, 103.70900),
    ("NTU", "campus", 1.34830, 103.68310),
    ("NTU SRC outdoor courts", "sports facility", 1.35000, 103.68800),
    ("HDB carpark 655", "carpark", 1.34520, 103.71300),
    ("Marina Square", "mall", 1.29130, 103.85780),
    ("Marina Square Carpark", "carpark", 1.29120, 103.85820),
    # points of interest used by recommendation
    ("Ichiban Sushi JCube", "japanese restaurant", 1.33340, 103.74010),
    ("Sushi Tei Jem", "japanese restaurant", 1.33300, 103.74350),
    ("Ramen Keisuke Westgate", "japanese restaurant", 1.33440, 103.74270),
    ("Tonkatsu Ginza IMM", "japanese restaurant", 1.33480, 103.74690),
    ("Ajisen Ramen Jurong Point", "japanese restaurant", 1.33970, 103.70600),
    ("Lake Garden Bicycle Bay A", "bicycle parking", 1.34150, 103.72390),
    ("Chinese Garden Bicycle Bay", "bicycle parking", 1.33880, 103.72980),
    ("Jem Taxi Stand", "taxi stand", 1.33270, 103.74330),
    ("Westgate Taxi Stand", "taxi stand", 1.33460, 103.74230),
    ("ActiveSG Gym Jurong East", "gym", 1.34600, 103.72940),
    ("Anytime Fitness Jurong West", "gym", 1.34050, 103.70520),
    ("Jurong Lake Fitness Studio", "gym", 1.33620, 103.73580),
    ("Astons Specialities Jurong", "western food", 1.33990, 103.70720),
    ("Collin's Grille Westgate", "western food", 1.33420, 103.74290),
    ("Fish & Co. Jurong West", "western food", 1.34120, 103.70810),
    ("Swensen's Jem", "western food", 1.33320, 103.74300),
]


def gazetteer():
    return {
        "category_aliases": {"bycycle parking": "bicycle parking", "taxi stands": "taxi stand"},
        "entries": [{"name": n, "category": c, "gps": [lat, lon]} for n, c, lat, lon in PLACES],
    }


def hourly(profile, rng, noise, missing=(), spikes=None, digits=1):
    start = NOW - timedelta(hours=HOURS - 1)
    values = []
    for i in range(HOURS):
        t = start + timedelta(hours=i)
        v = profile(t.hour + t.minute / 60, t.weekday()) + rng.gauss(0, noise)
        values.append(round(max(v, 0.0), digits))
    for i in missing:
        values[i] = None
    for i, v in (spikes or {}).items():
        values[i] = v
    return start, values


def bump(hour, centre, width):
    return math.exp(-((hour - centre) ** 2) / (2 * width**2))


def series_file(dataset, unit, locations):
    return {"dataset": dataset, "unit": unit, "step_seconds": 3600, "locations": locations}


def location(name, lat, lon, start, values):
    return {"name": name, "gps": [lat, lon], "start": start.isoformat(), "values": values}


def series_fixtures(rng):
    out = {}

    def lots(capacity, busy):
        return lambda h, wd: capacity * (1 - busy * (bump(h, 13, 3) + 0.8 * bump(h, 20, 2)) / 1.8)

    parking = []
    for name, lat, lon, cap, busy in [
        ("Jurong East carpark", 1.33350, 103.74250, 620, 0.7),
        ("Marina Square Carpark", 1.29120, 103.85820, 1100, 0.8),
        ("HDB carpark 655", 1.34520, 103.71300, 240, 0.5),
        ("NTU carpark", 1.34900, 103.68500, 380, 0.4),
    ]:
        spikes = {HOURS - 30: 3.0} if name == "HDB carpark 655" else None
        missing = (40, 41, 42, 200) if name == "HDB carpark 655" else ()
        start, values = hourly(lots(cap, busy), rng, cap * 0.01, missing, spikes, digits=0)
        parking.append(location(name, lat, lon, start, values))
    out["parking"] = series_file("parking", "available lots", parking)

    def speed(free, dip):
        return lambda h, wd: free - dip * (bump(h, 8.5, 1.2) + bump(h, 18.5, 1.5))

    traffic = []
    for name, lat, lon, free, dip in [
        ("Serangoon road", 1.31110, 103.85650, 48, 20),
        ("PIE express way", 1.33400, 103.78700, 78, 35),
        ("Jurong Area", 1.34040, 103.70900, 55, 18),
    ]:
        missing = (100, 101, 102, 103, 250) if name == "Jurong Area" else ()
        start, values = hourly(speed(free, dip), rng, 1.5, missing)
        traffic.append(location(name, lat, lon, start, values))
    out["traffic_speed"] = series_file("traffic speed", "km/h", traffic)

    rain = []
    for name, lat, lon, amount in [
        ("NTU", 1.34830, 103.68310, 6.0),
        ("Jurong Area", 1.34040, 103.70900, 5.0),
        ("Marina Square", 1.29130, 103.85780, 4.0),
    ]:
        start, values = hourly(lambda h, wd: amount * bump(h, 16, 1.5) - 0.5, rng, 0.2)
        rain.append(location(name, lat, lon, start, values))
    out["precipitation"] = series_file("precipitation", "mm/h", rain)

    air = []
    for name, lat, lon, base in [
        ("NTU", 1.34830, 103.68310, 14),
        ("Jurong Area", 1.34040, 103.70900, 18),
        ("Marina Square", 1.29130, 103.85780, 21),
    ]:
        start, values = hourly(lambda h, wd: base + 6 * bump(h, 9, 2) + 4 * bump(h, 19, 2), rng, 1.0)
        air.append(location(name, lat, lon, start, values))
    out["air"] = series_file("air", "PM2.5 ug/m3", air)
    return out


def events(rng):
    start = NOW - timedelta(days=14)
    rows = []
    for _ in range(42):
        t = start + timedelta(seconds=rng.randrange(14 * 86400))
        lat = rng.uniform(1.28, 1.40)
        lon = rng.uniform(103.68, 103.90)
        rows.append({"time": t.isoformat(), "gps": [round(lat, 5), round(lon, 5)]})
    rows.sort(key=lambda r: r["time"])
    return {
        "dataset": "traffic accident",
        "window": {"start": start.isoformat(), "end": NOW.isoformat()},
        "events": rows,
    }


def trajectory():
    start = NOW - timedelta(hours=2)
    fixes = []
    lat, lon = 1.33315, 103.74220
    for i in range(13):
        t = start + timedelta(minutes=10 * i)
        point = [round(lat + 0.0018 * i, 6), round(lon - 0.0024 * i, 6)]
        if i in (3, 4, 9):
            point = [None, None]
        fixes.append({"time": t.isoformat(), "gps": point})
    return {"dataset": "user trajectory", "fixes": fixes}


def taxis(rng):
    points = []
    for _ in range(25):
        points.append([round(rng.uniform(1.27, 1.42), 5), round(rng.uniform(103.65, 103.95), 5)])
    for dlat, dlon in [(0.002, 0.001), (-0.004, 0.006), (0.009, -0.003), (0.012, 0.011), (-0.001, -0.016)]:
        points.append([round(1.33310 + dlat, 5), round(103.74320 + dlon, 5)])
    return {"snapshot": NOW.isoformat(), "points": points}


def bus_timetable(rng):
    loads = ["SEA", "SEA", "SDA", "LSD"]
    services = {}
    for service, headway in [("15", 11), ("2", 8)]:
        t = NOW - timedelta(minutes=30)
        rows = []
        while t < NOW + timedelta(hours=2):
            t += timedelta(minutes=headway + rng.randrange(-2, 3))
            rows.append({"time": t.isoformat(), "load": rng.choice(loads)})
        services[service] = rows
    return {"stops": {"83139": {"name": "Opp Blk 201", "services": services}}}


def write(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")


def main():
    rng = random.Random(20240506)
    write(OUT / "gazetteer.json", gazetteer())
    for name, obj in series_fixtures(rng).items():
        write(OUT / "series" / f"{name}.json", obj)
    write(OUT / "events" / "traffic_accident.json", events(rng))
    write(OUT / "trajectories" / "user_trajectory.json", trajectory())
    write(OUT / "taxis.json", taxis(rng))
    write(OUT / "bus_timetable.json", bus_timetable(rng))
    write(OUT / "clock.json", {"now": NOW.isoformat()})


if __name__ == "__main__":
    main()
