"""Parse an SVG with the standard XML parser and check its marker counts."""
import sys
import xml.etree.ElementTree as ET

NS = "{http://www.w3.org/2000/svg}"

root = ET.parse(sys.argv[1]).getroot()
assert root.tag == NS + "svg", root.tag
counts = {"sample": 0, "seed": 0, "target": 0}
for el in root.iter():
    cls = el.get("class")
    if cls in counts:
        counts[cls] += 1
expected = [int(v) for v in sys.argv[2:5]]
got = [counts["sample"], counts["seed"], counts["target"]]
if got != expected:
    sys.exit(f"marker counts {got} != {expected}")
print("ok", got)
