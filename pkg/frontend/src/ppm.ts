// Client-side conversion of canvas pixels into a binary P6 pixmap, the
// only image format the service accepts.

export function encodeP6(
  width: number,
  height: number,
  rgba: Uint8ClampedArray | Uint8Array,
): Uint8Array {
  if (rgba.length !== width * height * 4) {
    throw new Error(
      `expected ${width * height * 4} RGBA bytes, got ${rgba.length}`,
    );
  }
  const header = `P6\n${width} ${height}\n255\n`;
  const out = new Uint8Array(header.length + width * height * 3);
  for (let i = 0; i < header.length; i++) {
    out[i] = header.charCodeAt(i);
  }
  let o = header.length;
  for (let p = 0; p < width * height; p++) {
    out[o++] = rgba[p * 4]!;
    out[o++] = rgba[p * 4 + 1]!;
    out[o++] = rgba[p * 4 + 2]!;
  }
  return out;
}

export function bytesToBase64(bytes: Uint8Array): string {
  let binary = "";
  const chunk = 0x8000;
  for (let i = 0; i < bytes.length; i += chunk) {
    binary += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return btoa(binary);
}
