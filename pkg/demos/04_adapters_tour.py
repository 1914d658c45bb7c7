# %% [markdown]
# # The baseline adapters
#
# Every task type has a small deterministic implementation over bundled
# fixtures (a gazetteer, hourly series, a taxi snapshot, a bus timetable).
# The clock is pinned to the fixture reference time.

# %%
import numpy as np

from urbanplanner.adapters import stub_toolkit
from urbanplanner.adapters.series import anomaly_scores, interpolate, seasonal_naive
from urbanplanner.plan import TaskType, TimeSpec

tk = stub_toolkit()
print("now:", tk.now)

# %%
marina = tk(TaskType.MAP_MAPPING, {"location_name_list": ["Marina Square Carpark"]})
forecast = tk(TaskType.TIME_SERIES_PREDICTION, {"location_gps_list": marina, "domain": "parking", "time": TimeSpec.parse("7PM")})
(s,) = forecast.series
print(s.label, list(zip([t.strftime("%H:%M") for t in s.timestamps], s.values)))

# %% [markdown]
# The primitives are plain functions too.

# %%
day = np.sin(np.linspace(0, 2 * np.pi, 24, endpoint=False)).round(2).tolist()
print(seasonal_naive(day * 2, 3))
print(interpolate([1.0, None, None, 4.0, None]))
print(anomaly_scores([5.0] * 30 + [9.0] + [5.0] * 5))

# %%
jem = tk(TaskType.MAP_MAPPING, {"location_name_list": ["Jem shopping centre"]})
print(tk(TaskType.TAXI_AVAILABILITY, {"location_gps_list": jem, "task_specific": ["2km"]}).rows[0]["count"], "taxis within 2 km")
print(tk(TaskType.BUS_ARRIVAL, {"bus_stop": "83139", "service_no": 15, "task_specific": "next"}).rows)
for row in tk(TaskType.RECOMMENDATION, {"location_gps_list": jem, "task_specific": "Japanese restaurant"}).rows:
    print(row["name"], row["distance_m"])
