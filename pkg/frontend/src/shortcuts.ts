/** Fixed keyboard map for the review workflow. */

export type ShortcutAction = "save" | "nextPage" | "prevPage" | "nextRed" | "promote";

export interface KeyLike {
  key: string;
  ctrlKey: boolean;
  shiftKey: boolean;
}

export function actionForKey(e: KeyLike): ShortcutAction | null {
  if (e.ctrlKey && e.shiftKey && (e.key === "G" || e.key === "g")) return "promote";
  if (e.ctrlKey && (e.key === "s" || e.key === "S")) return "save";
  if (e.ctrlKey && e.key === "ArrowRight") return "nextPage";
  if (e.ctrlKey && e.key === "ArrowLeft") return "prevPage";
  if (e.key === "F3") return "nextRed";
  return null;
}
