// Radial context menu geometry. Four category sectors at fixed angles, the
// same for every proxy, so muscle memory transfers between objects. The
// action set mirrors the service's catalog; compare is reached through its
// category button but travels as a dedicated command with an explicit
// participant list.

export const CATEGORIES = ["information", "compare", "share", "anchor"] as const;
export type Category = (typeof CATEGORIES)[number];

export const ACTIONS: Record<Category, string[]> = {
  information: ["info", "ask"],
  compare: ["compare"],
  share: ["send_to_contact", "add_to_shopping_list"],
  anchor: ["note", "timer", "countdown"],
};

export function actionCategory(action: string): Category {
  for (const cat of CATEGORIES) {
    if (ACTIONS[cat].includes(action)) return cat;
  }
  throw new Error(`unknown action ${action}`);
}

export const BUBBLE_R = 18;
export const MENU_INNER = 30; // dead zone over the bubble itself
export const MENU_OUTER = 92;
export const BUTTON_R = 15;

const SECTOR = Math.PI / 2;
// information starts at 12 o'clock and sectors run clockwise
const START = -Math.PI / 2;

export interface ActionSpot {
  category: Category;
  action: string;
  x: number;
  y: number;
  r: number;
}

export interface Sector {
  category: Category;
  start: number;
  end: number;
  actions: ActionSpot[];
}

export function menuLayout(cx: number, cy: number): Sector[] {
  const mid = (MENU_INNER + MENU_OUTER) / 2;
  return CATEGORIES.map((category, i) => {
    const start = START + i * SECTOR;
    const names = ACTIONS[category];
    const actions = names.map((action, j) => {
      const angle = start + (SECTOR * (j + 1)) / (names.length + 1);
      return {
        category,
        action,
        x: cx + mid * Math.cos(angle),
        y: cy + mid * Math.sin(angle),
        r: BUTTON_R,
      };
    });
    return { category, start, end: start + SECTOR, actions };
  });
}

export function hitAction(layout: Sector[], x: number, y: number): ActionSpot | null {
  for (const sector of layout) {
    for (const spot of sector.actions) {
      if (Math.hypot(x - spot.x, y - spot.y) <= spot.r) return spot;
    }
  }
  return null;
}

export function insideMenu(cx: number, cy: number, x: number, y: number): boolean {
  return Math.hypot(x - cx, y - cy) <= MENU_OUTER;
}
