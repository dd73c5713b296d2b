"""Parse a best-track snippet and derive intensification labels.

Hurricane Eta's first day, October 31 to November 1 2020, transcribed
from the public best-track archive. The labeling rule marks a time
positive when the wind 24 hours later is at least 30 kt higher.
"""

from wavecast import compute_ri_labels, parse_hurdat2

ETA = """\
AL292020,             ETA,      9,
20201031, 1800,, TD, 14.9N, 71.1W, 25, 1006,
20201101, 0000,, TD, 14.8N, 72.3W, 30, 1005,
20201101, 0600,, TS, 14.6N, 73.5W, 35, 1002,
20201101, 1200,, TS, 14.4N, 74.6W, 40, 1000,
20201101, 1800,, TS, 14.2N, 75.4W, 50, 994,
20201102, 0000,, TS, 14.0N, 76.1W, 60, 989,
20201102, 0600,, HU, 13.9N, 76.7W, 70, 987,
20201102, 1200,, HU, 13.8N, 77.4W, 85, 968,
20201102, 1800,, HU, 13.8N, 78.0W, 100, 950,
"""

(track,) = parse_hurdat2(ETA)
print(f"{track.storm_id} {track.name}: {len(track.records)} records")
for rec in track.records:
    print(f"  {rec.timestamp:%m-%d %H%M}Z {rec.status} "
          f"{rec.max_wind_kt:4d} kt {rec.min_pressure_mb:5d} mb")

print("\n24 h labels (1 = rapid intensification ahead):")
for lab in compute_ri_labels(track):
    marker = "<-- RI" if lab.label else ""
    print(f"  {lab.timestamp:%m-%d %H%M}Z  delta {lab.delta_kt:+4d} kt  "
          f"label {lab.label} {marker}")

# Eta's actual RI episode: 35 kt at 06Z Nov 1 to 100 kt at 18Z Nov 2,
# one of the fastest deepening rates of the 2020 season.
