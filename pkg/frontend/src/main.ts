// Browser entry point; tests construct App directly instead.
import { mount } from "./app.js";

mount();
