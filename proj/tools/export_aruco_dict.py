#!/usr/bin/env python3
"""Regenerates data/aruco_6x6_250.txt from OpenCV's predefined dictionary.

The checked-in file is authoritative; this script only documents where it
came from. Requires opencv-python with the aruco module.
"""
import cv2

OUT = "data/aruco_6x6_250.txt"

d = cv2.aruco.getPredefinedDictionary(cv2.aruco.DICT_6X6_250)
lines = []
for i in range(250):
    bits = cv2.aruco.Dictionary.getBitsFromByteList(d.bytesList[i].reshape(1, 5, 4), 6)
    lines.append("".join(str(int(b)) for b in bits.flatten()))

with open(OUT, "w") as f:
    f.write("# ArUco 6x6 dictionary, 250 codes. One code per line: 36 chars, '0'=black '1'=white,\n")
    f.write("# payload bits row-major (left to right, top to bottom). Line order defines the id.\n")
    for s in lines:
        f.write(s + "\n")
print(f"wrote {len(lines)} codes to {OUT}")
