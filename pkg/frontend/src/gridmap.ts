/**
 * Occupancy-grid rendering: frame cells to grayscale pixels.
 *
 * The frame contract: 255 means unknown, 0..100 is occupancy. Free renders
 * white, occupied black, unknown mid-gray, linear in between with half-up
 * rounding. Row 0 of the frame sits at the map origin and is drawn at the
 * bottom (y up), so the image is vertically flipped relative to cell order.
 */

export interface GridFrameData {
  width: number;
  height: number;
  cells: Uint8Array;
}

export function occupancyToGray(value: number): number {
  if (value === 255) {
    return 128;
  }
  if (value < 0 || value > 100 || !Number.isInteger(value)) {
    throw new RangeError(`occupancy value out of range: ${value}`);
  }
  return Math.floor(255 * (1 - value / 100) + 0.5);
}

export interface GridImage {
  width: number;
  height: number;
  rgba: Uint8ClampedArray;
}

export function frameToImage(frame: GridFrameData): GridImage {
  const { width, height, cells } = frame;
  if (cells.length !== width * height) {
    throw new RangeError(`cells length ${cells.length} != ${width}x${height}`);
  }
  const rgba = new Uint8ClampedArray(width * height * 4);
  for (let row = 0; row < height; row++) {
    const imageRow = height - 1 - row; // row 0 at the bottom
    for (let col = 0; col < width; col++) {
      const gray = occupancyToGray(cells[row * width + col]);
      const offset = (imageRow * width + col) * 4;
      rgba[offset] = gray;
      rgba[offset + 1] = gray;
      rgba[offset + 2] = gray;
      rgba[offset + 3] = 255;
    }
  }
  return { width, height, rgba };
}

/** Canvas panel: newest frame wins, bad frames show a banner and are skipped. */
export class GridmapView {
  readonly element: HTMLDivElement;
  private canvas: HTMLCanvasElement;
  private banner: HTMLDivElement;
  private caption: HTMLDivElement;
  private buffer: HTMLCanvasElement;

  constructor() {
    this.element = document.createElement("div");
    this.element.className = "gridmap-view";
    this.canvas = document.createElement("canvas");
    this.canvas.width = 480;
    this.canvas.height = 360;
    this.banner = document.createElement("div");
    this.banner.className = "error-banner hidden";
    this.caption = document.createElement("div");
    this.caption.className = "gridmap-caption";
    this.buffer = document.createElement("canvas");
    this.element.append(this.banner, this.canvas, this.caption);
  }

  draw(frame: GridFrameData, resolution: number): void {
    let image: GridImage;
    try {
      image = frameToImage(frame);
    } catch (err) {
      this.banner.textContent = `bad grid frame: ${(err as Error).message}`;
      this.banner.classList.remove("hidden");
      return;
    }
    this.banner.classList.add("hidden");
    if (image.width === 0 || image.height === 0) {
      this.canvas.getContext("2d")?.clearRect(0, 0, this.canvas.width, this.canvas.height);
      this.caption.textContent = "empty map";
      return;
    }
    this.buffer.width = image.width;
    this.buffer.height = image.height;
    const bctx = this.buffer.getContext("2d")!;
    const pixels = new Uint8ClampedArray(image.rgba); // fresh ArrayBuffer for ImageData
    bctx.putImageData(new ImageData(pixels, image.width, image.height), 0, 0);

    const ctx = this.canvas.getContext("2d")!;
    ctx.imageSmoothingEnabled = false; // one crisp block per cell
    const scale = Math.min(this.canvas.width / image.width, this.canvas.height / image.height);
    const w = image.width * scale;
    const h = image.height * scale;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    ctx.drawImage(this.buffer, 0, (this.canvas.height - h) / 2, w, h);
    this.caption.textContent =
      `${image.width} x ${image.height} cells at ${resolution.toFixed(3)} m/cell`;
  }
}
