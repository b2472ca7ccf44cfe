export interface ToastOptions {
  retry?: () => void;
  durationMs?: number;
}

// Non-blocking error surface; the viewport keeps its last good mesh.
export function showToast(
  container: HTMLElement,
  message: string,
  options: ToastOptions = {},
): HTMLElement {
  const toast = document.createElement("div");
  toast.className = "toast";
  const text = document.createElement("span");
  text.textContent = message;
  toast.appendChild(text);
  if (options.retry) {
    const button = document.createElement("button");
    button.textContent = "retry";
    button.addEventListener("click", () => {
      toast.remove();
      options.retry!();
    });
    toast.appendChild(button);
  }
  container.appendChild(toast);
  setTimeout(() => toast.remove(), options.durationMs ?? 5000);
  return toast;
}
