// Client-side OBJ export of the currently displayed mesh.

export function meshToObj(vertices: Float32Array, faces: Uint32Array): string {
  const lines: string[] = [];
  for (let i = 0; i < vertices.length; i += 3) {
    lines.push(`v ${vertices[i]} ${vertices[i + 1]} ${vertices[i + 2]}`);
  }
  for (let i = 0; i < faces.length; i += 3) {
    lines.push(`f ${faces[i] + 1} ${faces[i + 1] + 1} ${faces[i + 2] + 1}`);
  }
  return lines.join("\n") + "\n";
}

export function downloadObj(filename: string, text: string): void {
  const blob = new Blob([text], { type: "model/obj" });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = filename;
  anchor.click();
  URL.revokeObjectURL(url);
}
